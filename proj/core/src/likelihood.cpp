#include "penidm/likelihood.hpp"

#include <cmath>

#include "penidm/error.hpp"
#include "penidm/parallel.hpp"

namespace penidm {

Likelihood::Likelihood(const Dataset& data, ModelSpec spec)
    : spec_(std::move(spec)),
      baselines_{Baseline(spec_.baselines[0]), Baseline(spec_.baselines[1]),
                 Baseline(spec_.baselines[2])},
      n_(data.n()) {
  data.validate();
  spec_.validate(data.d());
  if (n_ < 1) throw ValidationError("likelihood needs at least one subject");
  const bool markov = spec_.structure == TransitionStructure::Markov;

  for (Eigen::Index begin = 0; begin < n_; begin += kLikelihoodBlockSize) {
    Block b;
    b.begin = begin;
    b.size = std::min(kLikelihoodBlockSize, n_ - begin);
    const Eigen::Index m = b.size;
    const Eigen::ArrayXd d1 = data.delta1.segment(begin, m).cast<double>().array();
    const Eigen::ArrayXd d2 = data.delta2.segment(begin, m).cast<double>().array();
    b.dtilde = {d1, (1.0 - d1) * d2, d1 * d2};
    for (int g = 0; g < 3; ++g) b.want[g] = b.dtilde[g] > 0.5;
    b.c = d1 + d2;
    b.both = d1 * d2;

    for (int g = 0; g < 3; ++g) {
      const auto& cols = spec_.layout.columns(g);
      b.x[g].resize(m, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) {
        b.x[g].col(j) = data.x.col(cols[j]).segment(begin, m);
      }
    }

    std::vector<double> t1(m), t3(m), t3_entry(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double y1 = data.y1(begin + i), y2 = data.y2(begin + i);
      const bool nonterminal = d1(i) > 0.5;
      t1[i] = y1;
      if (markov) {
        t3[i] = nonterminal ? y2 : 0.0;
        t3_entry[i] = nonterminal ? y1 : 0.0;
      } else {
        t3[i] = nonterminal ? y2 - y1 : 0.0;
      }
    }
    b.batch[0] = baselines_[0].prepare(t1);
    b.batch[1] = baselines_[1].prepare(t1);
    b.batch[2] = baselines_[2].prepare(t3);
    if (markov) b.entry3 = baselines_[2].prepare(t3_entry);
    blocks_.push_back(std::move(b));
  }
}

void Likelihood::eval_block(const Block& b, const Eigen::VectorXd& psi, int order,
                            Partial& out) const {
  const ModelLayout& L = spec_.layout;
  const Eigen::Index m = b.size;
  const double sigma = psi(L.sigma_index());
  const double s = std::exp(sigma);
  const double inv_s = std::exp(-sigma);

  std::array<BatchValues, 3> bv;
  std::array<Eigen::ArrayXd, 3> e, H0, H;
  for (int g = 0; g < 3; ++g) {
    const Eigen::VectorXd phi = psi.segment(L.phi_offset(g), L.k(g));
    baselines_[g].evaluate(b.batch[g], phi, order, &b.want[g], bv[g]);
    const Eigen::VectorXd eta = b.x[g] * psi.segment(L.beta_offset(g), L.d(g));
    e[g] = eta.array().exp();
    if (g == 2 && spec_.structure == TransitionStructure::Markov) {
      BatchValues entry;
      const Eigen::Array<bool, Eigen::Dynamic, 1> none =
          Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(m, false);
      baselines_[2].evaluate(b.entry3, phi, order, &none, entry);
      bv[2].cum -= entry.cum;
      if (order >= 1) bv[2].dcum -= entry.dcum;
      if (order >= 2) {
        for (Eigen::Index i = 0; i < m; ++i) bv[2].d2cum[i] -= entry.d2cum[i];
      }
    }
    H0[g] = bv[g].cum.array();
    H[g] = H0[g] * e[g];
    // log h_g = log h0_g + eta_g on the rows that contribute a density term.
    bv[g].log_h.array() += b.want[g].select(eta.array(), 0.0);
  }

  const Eigen::ArrayXd A = H[0] + H[1] + H[2];
  const Eigen::ArrayXd D = 1.0 + s * A;
  const Eigen::ArrayXd log1p_sA = (s * A).log1p();
  const double log1p_s = std::log1p(s);

  Eigen::ArrayXd f = (inv_s + b.c) * log1p_sA - b.both * log1p_s;
  for (int g = 0; g < 3; ++g) f -= b.dtilde[g] * bv[g].log_h.array();
  // Unwanted rows carry log_h = 0 so the products above are exact zeros.

  out.f = f;
  out.a = A;
  out.value = f.sum();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(f(i))) {
      throw NumericalError("non-finite likelihood contribution", static_cast<long>(b.begin + i));
    }
  }
  if (order < 1) return;

  const int dim = L.size();
  const Eigen::ArrayXd w = (1.0 + b.c * s) / D;
  out.grad.setZero(dim);
  for (int g = 0; g < 3; ++g) {
    const Eigen::VectorXd r = (w * H[g] - b.dtilde[g]).matrix();
    out.grad.segment(L.beta_offset(g), L.d(g)).noalias() = b.x[g].transpose() * r;
    const Eigen::VectorXd we = (w * e[g]).matrix();
    out.grad.segment(L.phi_offset(g), L.k(g)).noalias() =
        bv[g].dcum.transpose() * we - bv[g].dlog_h.transpose() * b.dtilde[g].matrix();
  }
  out.grad(L.sigma_index()) =
      (-b.both * s / (1.0 + s) - inv_s * log1p_sA + (1.0 + b.c * s) * A / D).sum();
  if (!out.grad.allFinite()) throw NumericalError("non-finite likelihood gradient");
  if (order < 2) return;

  // A_theta for every non-sigma coordinate, one row per subject.
  Eigen::MatrixXd G(m, dim - 1);
  for (int g = 0; g < 3; ++g) {
    G.middleCols(L.beta_offset(g), L.d(g)) = b.x[g].array().colwise() * H[g];
    G.middleCols(L.phi_offset(g), L.k(g)) = bv[g].dcum.array().colwise() * e[g];
  }
  out.hess.setZero(dim, dim);
  const Eigen::VectorXd cross = (-w * s / D).matrix();
  out.hess.topLeftCorner(dim - 1, dim - 1).noalias() = G.transpose() * cross.asDiagonal() * G;
  for (int g = 0; g < 3; ++g) {
    const int bo = L.beta_offset(g), po = L.phi_offset(g), d = L.d(g), k = L.k(g);
    const Eigen::VectorXd wH = (w * H[g]).matrix();
    const Eigen::VectorXd we = (w * e[g]).matrix();
    out.hess.block(bo, bo, d, d).noalias() += b.x[g].transpose() * wH.asDiagonal() * b.x[g];
    const Eigen::MatrixXd bp = b.x[g].transpose() * we.asDiagonal() * bv[g].dcum;
    out.hess.block(bo, po, d, k) += bp;
    out.hess.block(po, bo, k, d) += bp.transpose();
    auto pp = out.hess.block(po, po, k, k);
    for (Eigen::Index i = 0; i < m; ++i) {
      pp += we(i) * bv[g].d2cum[i];
      if (b.want[g](i)) pp -= bv[g].d2log_h[i];
    }
  }
  const Eigen::VectorXd sc = (s * (b.c - A) / D.square()).matrix();
  const Eigen::VectorXd col = G.transpose() * sc;
  out.hess.col(dim - 1).head(dim - 1) = col;
  out.hess.row(dim - 1).head(dim - 1) = col.transpose();
  out.hess(dim - 1, dim - 1) =
      (-b.both * s / ((1.0 + s) * (1.0 + s)) + inv_s * log1p_sA - A / D + b.c * s * A / D -
       (1.0 + b.c * s) * s * A.square() / D.square())
          .sum();
}

double Likelihood::evaluate(const Eigen::VectorXd& psi, int order, Eigen::VectorXd* grad,
                            Eigen::MatrixXd* hess, Eigen::VectorXd* per_subject,
                            Eigen::VectorXd* a_values) const {
  if (psi.size() != dim()) {
    throw ValidationError("parameter vector has length " + std::to_string(psi.size()) +
                          ", model expects " + std::to_string(dim()));
  }
  if (!psi.allFinite()) throw NumericalError("non-finite parameter vector");
  std::vector<Partial> parts(blocks_.size());
  parallel_for(blocks_.size(), [&](std::size_t j) { eval_block(blocks_[j], psi, order, parts[j]); });

  if (per_subject != nullptr || a_values != nullptr) {
    if (per_subject) per_subject->resize(n_);
    if (a_values) a_values->resize(n_);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      if (per_subject) per_subject->segment(blocks_[j].begin, blocks_[j].size) = parts[j].f;
      if (a_values) a_values->segment(blocks_[j].begin, blocks_[j].size) = parts[j].a;
    }
  }
  tree_reduce(parts, [order](Partial& into, const Partial& from) {
    into.value += from.value;
    if (order >= 1) into.grad += from.grad;
    if (order >= 2) into.hess += from.hess;
  });
  const double inv_n = 1.0 / static_cast<double>(n_);
  if (grad) *grad = parts[0].grad * inv_n;
  if (hess) {
    // Average and symmetrize exactly.
    *hess = parts[0].hess * inv_n;
    const Eigen::MatrixXd upper = hess->triangularView<Eigen::Upper>();
    *hess = upper;
    hess->triangularView<Eigen::StrictlyLower>() = upper.transpose();
  }
  return parts[0].value * inv_n;
}

double Likelihood::value(const Eigen::VectorXd& psi) const {
  return evaluate(psi, 0, nullptr, nullptr, nullptr, nullptr);
}

double Likelihood::value_gradient(const Eigen::VectorXd& psi, Eigen::VectorXd& grad) const {
  return evaluate(psi, 1, &grad, nullptr, nullptr, nullptr);
}

double Likelihood::value_gradient_hessian(const Eigen::VectorXd& psi, Eigen::VectorXd& grad,
                                          Eigen::MatrixXd& hess) const {
  return evaluate(psi, 2, &grad, &hess, nullptr, nullptr);
}

Eigen::VectorXd Likelihood::contributions(const Eigen::VectorXd& psi) const {
  Eigen::VectorXd f;
  evaluate(psi, 0, nullptr, nullptr, &f, nullptr);
  return f;
}

Eigen::VectorXd Likelihood::cum_hazard_sums(const Eigen::VectorXd& psi) const {
  Eigen::VectorXd a;
  evaluate(psi, 0, nullptr, nullptr, nullptr, &a);
  return a;
}

double cum_hazard_sum(const ModelSpec& spec, const Eigen::VectorXd& psi, const SubjectRecord& rec,
                      const Eigen::RowVectorXd& x) {
  Dataset one;
  one.y1 = Eigen::VectorXd::Constant(1, rec.y1);
  one.y2 = Eigen::VectorXd::Constant(1, rec.y2);
  one.delta1 = Eigen::VectorXi::Constant(1, rec.delta1);
  one.delta2 = Eigen::VectorXi::Constant(1, rec.delta2);
  one.x = x;
  return Likelihood(one, spec).cum_hazard_sums(psi)(0);
}

double neg_log_lik(const ModelSpec& spec, const Eigen::VectorXd& psi, const Dataset& data) {
  return Likelihood(data, spec).value(psi);
}

Eigen::VectorXd gradient(const ModelSpec& spec, const Eigen::VectorXd& psi, const Dataset& data) {
  Eigen::VectorXd g;
  Likelihood(data, spec).value_gradient(psi, g);
  return g;
}

Eigen::MatrixXd hessian(const ModelSpec& spec, const Eigen::VectorXd& psi, const Dataset& data) {
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  Likelihood(data, spec).value_gradient_hessian(psi, g, h);
  return h;
}

}  // namespace penidm
