#include "retro/encoders.hpp"

#include "retro/error.hpp"

namespace retro {

GraphBatch graph_batch(std::span<const MolecularGraph* const> molecules) {
  GraphBatch batch;
  std::vector<double> atoms, bonds;
  int offset = 0;
  for (const MolecularGraph* g : molecules) {
    const GraphFeatures f = featurize(*g);
    for (const AtomFeatures& a : f.atoms) {
      atoms.insert(atoms.end(), a.begin(), a.end());
      batch.graph_of.push_back(batch.graphs);
    }
    for (std::size_t b = 0; b < g->bond_count(); ++b) {
      const Bond& bond = g->bond(static_cast<int>(b));
      for (int dir = 0; dir < 2; ++dir) {
        batch.source.push_back(offset + (dir ? bond.end : bond.begin));
        batch.target.push_back(offset + (dir ? bond.begin : bond.end));
        bonds.insert(bonds.end(), f.bonds[b].begin(), f.bonds[b].end());
      }
    }
    offset += static_cast<int>(g->atom_count());
    ++batch.graphs;
  }
  batch.atoms = Tensor::from(offset, kAtomFeatureSize, std::move(atoms));
  batch.bonds = Tensor::from(static_cast<int>(batch.source.size()), kBondFeatureSize, std::move(bonds));
  return batch;
}

GraphBatch merge_batches(std::span<const GraphBatch* const> parts) {
  GraphBatch out;
  std::vector<double> atoms, bonds;
  int offset = 0;
  for (const GraphBatch* b : parts) {
    atoms.insert(atoms.end(), b->atoms.values.begin(), b->atoms.values.end());
    bonds.insert(bonds.end(), b->bonds.values.begin(), b->bonds.values.end());
    for (int s : b->source) out.source.push_back(s + offset);
    for (int t : b->target) out.target.push_back(t + offset);
    for (int g : b->graph_of) out.graph_of.push_back(g + out.graphs);
    offset += b->atoms.rows;
    out.graphs += b->graphs;
  }
  out.atoms = Tensor::from(offset, kAtomFeatureSize, std::move(atoms));
  out.bonds = Tensor::from(static_cast<int>(out.source.size()), kBondFeatureSize, std::move(bonds));
  return out;
}

Tensor fingerprint_rows(std::span<const Fingerprint* const> fingerprints) {
  if (fingerprints.empty()) return Tensor(0, 0);
  const int width = static_cast<int>(fingerprints[0]->size());
  Tensor out(static_cast<int>(fingerprints.size()), width);
  for (std::size_t r = 0; r < fingerprints.size(); ++r) {
    if (static_cast<int>(fingerprints[r]->size()) != width) throw ShapeError("fingerprints of mixed length");
    for (int bit : fingerprints[r]->on_bits()) out.at(static_cast<int>(r), bit) = 1.0;
  }
  return out;
}

}  // namespace retro
