#include "penidm/params.hpp"

#include "penidm/error.hpp"

namespace penidm {

ModelLayout::ModelLayout(std::array<std::vector<int>, 3> columns, std::array<int, 3> k)
    : columns_(std::move(columns)), k_(k) {
  int off = 0;
  for (int g = 0; g < 3; ++g) {
    beta_off_[g] = off;
    off += d(g);
  }
  for (int g = 0; g < 3; ++g) {
    if (k_[g] < 1) throw ValidationError("baseline parameter count must be positive");
    phi_off_[g] = off;
    off += k_[g];
  }
  size_ = off + 1;
}

ModelLayout ModelLayout::shared(int d, std::array<int, 3> k) {
  std::vector<int> cols(d);
  for (int j = 0; j < d; ++j) cols[j] = j;
  return ModelLayout({cols, cols, cols}, k);
}

std::vector<bool> ModelLayout::beta_mask() const {
  std::vector<bool> m(size_, false);
  for (int j = 0; j < num_beta(); ++j) m[j] = true;
  return m;
}

Eigen::VectorXd ModelParams::flatten() const {
  Eigen::Index size = 1;
  for (int g = 0; g < 3; ++g) size += beta[g].size() + phi[g].size();
  Eigen::VectorXd psi(size);
  Eigen::Index off = 0;
  for (int g = 0; g < 3; ++g) {
    psi.segment(off, beta[g].size()) = beta[g];
    off += beta[g].size();
  }
  for (int g = 0; g < 3; ++g) {
    psi.segment(off, phi[g].size()) = phi[g];
    off += phi[g].size();
  }
  psi(off) = sigma;
  return psi;
}

ModelParams ModelParams::unflatten(const ModelLayout& layout, const Eigen::VectorXd& psi) {
  if (psi.size() != layout.size()) {
    throw ValidationError("parameter vector has length " + std::to_string(psi.size()) +
                          ", layout expects " + std::to_string(layout.size()));
  }
  ModelParams p;
  for (int g = 0; g < 3; ++g) {
    p.beta[g] = psi.segment(layout.beta_offset(g), layout.d(g));
    p.phi[g] = psi.segment(layout.phi_offset(g), layout.k(g));
  }
  p.sigma = psi(layout.sigma_index());
  return p;
}

ModelSpec ModelSpec::shared(std::array<BaselineSpec, 3> baselines, TransitionStructure structure,
                            int d) {
  ModelSpec m;
  m.layout = ModelLayout::shared(
      d, {baselines[0].num_params, baselines[1].num_params, baselines[2].num_params});
  m.baselines = std::move(baselines);
  m.structure = structure;
  return m;
}

void ModelSpec::validate(Eigen::Index num_covariates) const {
  for (int g = 0; g < 3; ++g) {
    baselines[g].validate();
    if (baselines[g].num_params != layout.k(g)) {
      throw ValidationError("layout and baseline " + std::to_string(g + 1) +
                            " disagree on parameter count");
    }
    for (int c : layout.columns(g)) {
      if (c < 0 || c >= num_covariates) {
        throw ValidationError("transition " + std::to_string(g + 1) +
                              " references covariate column " + std::to_string(c) +
                              " outside the design");
      }
    }
  }
}

}  // namespace penidm
