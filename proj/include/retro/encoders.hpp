#pragma once

#include <span>

#include "retro/molgraph.hpp"
#include "retro/numerics.hpp"

namespace retro {

// Featurised batch for Mpnn::encode, one graph per molecule.
GraphBatch graph_batch(std::span<const MolecularGraph* const> molecules);

// Concatenates single-graph batches in order.
GraphBatch merge_batches(std::span<const GraphBatch* const> parts);

// Fingerprint bits as 0/1 rows.
Tensor fingerprint_rows(std::span<const Fingerprint* const> fingerprints);

}  // namespace retro
