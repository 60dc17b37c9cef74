// Copyright 2026 The TCN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TCN_SYNTHGEN_H_
#define TCN_SYNTHGEN_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tcn/corpus.h"

namespace tcn {

struct RelationSignature {
  std::string name;
  int subject_type = 0;
  int object_type = 0;
};

struct ColumnChoice {
  int type = 0;
  int relation = -1;  // -1 for the subject column
};

// A page template. Each table picks a page kind, which fixes the topic's
// type; a column lists either one choice or one choice per page kind.
struct SchemaTemplate {
  std::string name;
  std::vector<std::string> header;
  std::vector<int> topic_types;
  std::vector<std::vector<ColumnChoice>> columns;

  int num_kinds() const { return static_cast<int>(topic_types.size()); }
  const ColumnChoice& column(int n, int kind) const {
    return columns[n].size() == 1 ? columns[n][0] : columns[n][kind];
  }
};

// Generator-side ontology: types, typed relations and table templates.
struct SynthOntology {
  std::vector<std::string> types;
  std::vector<RelationSignature> relations;
  std::vector<SchemaTemplate> schemas;

  Ontology Labels() const;
  // Throws DataError on a relation or schema that references an unknown
  // type, or a schema whose relations do not fit its column types.
  void Validate() const;
};

// Music-site analog: people, releases, recordings, labels, dates, durations
// and free strings. Every template serves two page kinds whose topics differ
// in type, and some columns change type or relation with the page kind.
SynthOntology MusicOntology();

struct GenConfig {
  int num_schemas = 5;
  int tables_per_schema = 40;
  int min_rows = 3;  // data rows
  int max_rows = 6;
  // Probability that a cell reuses an entity already placed in another table.
  double overlap_rate = 0.5;
  // Probability that a table's topic is planted as a cell of another table.
  double topic_reference_rate = 1.0;
  // Probability that a cell holds a random entity of a random type.
  double noise_rate = 0.3;
  // Probability that an entity token comes from the pool shared by all types,
  // for cell entities and for topics.
  double ambiguity_rate = 0.8;
  double topic_ambiguity_rate = 0.8;
  int entities_per_type = 3000;
  int private_tokens_per_type = 40;
  int shared_tokens = 60;
  uint64_t seed = 0;

  void Validate() const;
};

struct GenStats {
  int num_tables = 0;
  int num_schemas = 0;
  int noisy_cells = 0;
  int topic_references = 0;
  double avg_value_cells = 0;
  double avg_position_cells = 0;
  double avg_topic_cells = 0;
};

struct GenResult {
  LabeledDataset dataset;
  GenStats stats;
};

// Schema ids cycle through the ontology's templates when num_schemas
// exceeds their number. Throws DataError when an entity pool runs dry.
GenResult Generate(const SynthOntology& ontology, const GenConfig& config);

// JSON manifest: config echo and achieved statistics.
void WriteManifest(std::ostream& out, const GenConfig& config, const GenStats& stats);

}  // namespace tcn

#endif  // TCN_SYNTHGEN_H_
