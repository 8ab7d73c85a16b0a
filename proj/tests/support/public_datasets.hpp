#pragma once

// Published split sizes of the seven slot-labelling datasets, looked up under
// $SENTSCORE_DATA_DIR/<dir>/{train,dev,test}.conll.

#include <array>

#include "sentscore/corpus.hpp"

namespace sentscore::testing {

struct PublicDataset {
  const char* dir;
  DatasetStats counts;  // train, dev, test, |T|
};

inline constexpr std::array<PublicDataset, 7> kPublicDatasets{{
    {"atis", {4478, 500, 893, 83}},
    {"snips", {13084, 700, 700, 39}},
    {"movie_trivia", {7005, 811, 1953, 12}},
    {"movie", {8722, 1053, 2443, 12}},
    {"restaurant", {6845, 815, 1521, 8}},
    {"mtop", {15667, 2235, 4386, 75}},
    {"mtod", {30521, 4181, 8621, 16}},
}};

}  // namespace sentscore::testing
