#include "ura/self_check.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "ura/channel_model.hpp"
#include "ura/codebook.hpp"
#include "ura/detector.hpp"
#include "ura/errors.hpp"
#include "ura/system_sim.hpp"
#include "ura/tree_code.hpp"

namespace ura {

namespace {

struct CheckFailed {
  std::string why;
};

void expect(bool ok, const std::string& why) {
  if (!ok) throw CheckFailed{why};
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

using Check = std::pair<const char*, std::function<void()>>;

std::vector<Check> checks() {
  std::vector<Check> list;

  list.emplace_back("omega: zero LOS, unit amplitudes", [] {
    ChannelSpec spec = ChannelSpec::iid(2, 2);
    const RMatrix omega = build_omega(spec).omega;
    expect(omega.isApproxToConstant(1.0, 0.0), "expected an all-ones coupling matrix");
  });

  list.emplace_back("omega: entrywise |hbar|^2 + p^2", [] {
    ChannelSpec spec = ChannelSpec::iid(2, 2);
    spec.mode = ChannelMode::correlated;
    spec.hbar = CMatrix::Zero(2, 2);
    spec.hbar(0, 0) = 1.0;
    spec.p << 0, 1, 1, 0;
    const RMatrix omega = build_omega(spec).omega;
    RMatrix want(2, 2);
    want << 1, 1, 1, 0;
    expect((omega - want).cwiseAbs().maxCoeff() < 1e-15, "coupling differs from [[1,1],[1,0]]");
  });

  list.emplace_back("normalize: 4x power halves amplitudes", [] {
    ChannelSpec spec = ChannelSpec::iid(3, 2);
    spec.mode = ChannelMode::correlated;
    spec.p *= 2.0;
    const ChannelSpec out = normalize_spec(spec);
    expect((out.p.array() - 1.0).abs().maxCoeff() < 1e-12, "amplitudes not halved");
  });

  list.emplace_back("normalize: identity on normalized spec", [] {
    const ChannelSpec spec = ChannelSpec::iid(4, 2);
    const ChannelSpec out = normalize_spec(spec);
    expect((out.p - spec.p).cwiseAbs().maxCoeff() < 1e-12, "normalized spec changed");
  });

  list.emplace_back("sample: zero scattering is deterministic", [] {
    ChannelSpec spec = ChannelSpec::iid(2, 2);
    spec.mode = ChannelMode::correlated;
    spec.p.setZero();
    spec.hbar = CMatrix::Zero(2, 2);
    spec.hbar(0, 0) = std::sqrt(2.0);
    spec.hbar(1, 1) = std::sqrt(2.0);
    Rng rng = make_rng(7);
    expect((sample_h_tilde(spec, rng) - spec.hbar).norm() == 0.0, "h_tilde differs from hbar");
  });

  list.emplace_back("lambda_t: column sums", [] {
    const RVector a = transmit_eigenvalues({RMatrix::Ones(3, 2)}).lambda_t;
    const RVector b = transmit_eigenvalues({RMatrix(RVector::Constant(2, 2.0).asDiagonal())}).lambda_t;
    expect(a.size() == 2 && a[0] == 3.0 && a[1] == 3.0, "all-ones 3x2 should give [3,3]");
    expect(b.size() == 2 && b[0] == 2.0 && b[1] == 2.0, "diag(2,2) should give [2,2]");
  });

  list.emplace_back("correlated law: zero correlation is flat", [] {
    Rng rng = make_rng(1);
    const ChannelSpec spec = make_exp_correlated_spec(8, 2, 0.0, 0.0, 0.0, rng);
    const RMatrix omega = build_omega(spec).omega;
    expect((omega.array() - 1.0).abs().maxCoeff() < 1e-10, "coupling is not flat");
  });

  list.emplace_back("correlated law: large rician factor is LOS dominated", [] {
    Rng rng = make_rng(2);
    const ChannelSpec spec = make_exp_correlated_spec(8, 2, 0.0, 0.0, 1e4, rng);
    expect(spec.hbar.cwiseAbs2().sum() >= 0.99 * 16.0, "LOS power fraction below 0.99");
  });

  list.emplace_back("codebook: deterministic in seed", [] {
    const Codebook a = generate_codebook(11, 4, 8, false);
    const Codebook b = generate_codebook(11, 4, 8, false);
    expect(a.a == b.a, "two draws with one seed differ");
  });

  list.emplace_back("codebook: normalized columns have norm^2 D", [] {
    const Codebook cb = generate_codebook(3, 6, 16, true);
    for (Index i = 0; i < cb.size(); ++i)
      expect(close(cb.column(i).squaredNorm(), 6.0, 1e-12), "column " + std::to_string(i) + " off");
  });

  list.emplace_back("tree code: parity matrix shapes", [] {
    std::vector<int> profile{12};
    for (int k = 0; k < 28; ++k) profile.push_back(3);
    profile.insert(profile.end(), {0, 0, 0});
    const auto spec = TreeCodeSpec::from_profile(12, profile, 5);
    const ParityRules rules = build_rules(spec);
    expect(spec.w == 96 && spec.s == 32, "profile should give W=96, S=32");
    expect(rules.g[1].rows == 9 && rules.g[1].cols == 12, "G_2 should be 9x12");
    expect(rules.g[31].rows == 12 && rules.g[31].cols == 96, "G_32 should be 12x96");
  });

  list.emplace_back("tree code: no parity gives empty matrix", [] {
    const auto spec = TreeCodeSpec::from_profile(4, {4, 4}, 1);
    expect(build_rules(spec).g[1].rows == 0, "V_s = 0 should leave G_s empty");
  });

  list.emplace_back("tree code: zero message encodes to zeros", [] {
    const auto spec = TreeCodeSpec::from_profile(4, {4, 2, 2}, 9);
    const ChunkSequence idx = encode(Bits(static_cast<std::size_t>(spec.w)), build_rules(spec), spec);
    for (auto c : idx) expect(c == 0, "nonzero chunk for the all-zero message");
  });

  list.emplace_back("tree code: singleton lists round trip", [] {
    const auto spec = TreeCodeSpec::from_profile(4, {4, 2, 2}, 9);
    const ParityRules rules = build_rules(spec);
    Rng rng = make_rng(4);
    const Bits msg = random_message(spec.w, rng);
    const std::vector<ChunkSequence> seqs{encode(msg, rules, spec)};
    const auto out = decode(SlotLists::from_sequences(seqs, spec.s), rules, spec);
    expect(out.size() == 1 && out[0] == msg, "decoder did not return exactly the message");
  });

  list.emplace_back("tree code: empty first list decodes to nothing", [] {
    const auto spec = TreeCodeSpec::from_profile(4, {4, 2, 2}, 9);
    const SlotLists lists({{}, {1, 2}, {3}});
    expect(decode(lists, build_rules(spec), spec).empty(), "expected no paths");
  });

  list.emplace_back("tree code: singleton false-path estimate", [] {
    const auto spec = TreeCodeSpec::from_profile(4, {4, 2, 2}, 9);
    const std::vector<std::size_t> sizes{1, 1, 1};
    expect(close(expected_false_paths(spec, sizes), std::pow(2.0, -4.0), 1e-15), "expected 2^-4");
  });

  list.emplace_back("detector: zero observation covariance", [] {
    const SampleCovariance cov = sample_covariance(CMatrix::Zero(3, 5));
    expect(cov.sigma_hat.norm() == 0.0, "Sigma_hat should vanish");
  });

  list.emplace_back("detector: cost at gamma = 0", [] {
    const Codebook cb = generate_codebook(2, 4, 3, false);
    Rng rng = make_rng(3);
    const SampleCovariance cov = sample_covariance(complex_normal_matrix(4, 10, rng));
    const double sigma2 = 0.7;
    const double want = 4.0 * std::log(sigma2) + cov.sigma_hat.trace().real() / sigma2;
    expect(close(cost(GammaVector::Zero(3), cb, cov, sigma2), want, 1e-10), "f(0) mismatch");
  });

  list.emplace_back("detector: perfect fit is stationary", [] {
    const Codebook cb = generate_codebook(5, 4, 3, false);
    GammaVector gamma(3);
    gamma << 0.5, 0.0, 2.0;
    const SigmaState state = SigmaState::exact(gamma, cb, 1.0);
    SampleCovariance cov{state.sigma_inv.inverse(), 1};
    for (Index i = 0; i < 3; ++i) {
      const auto forms = coordinate_forms(i, state, cov, cb);
      const double d = optimal_step(forms, gamma[i]);
      if (gamma[i] > 0.0) expect(std::abs(d) < 1e-9, "nonzero step at a perfect fit");
      expect(std::abs(step_reward(forms, d)) < 1e-9, "nonzero reward at a perfect fit");
    }
  });

  list.emplace_back("detector: clip branch", [] {
    const Codebook cb = generate_codebook(6, 4, 3, false);
    GammaVector gamma(3);
    gamma << 50.0, 0.0, 0.0;
    const SigmaState state = SigmaState::exact(gamma, cb, 1.0);
    const SampleCovariance cov{CMatrix::Identity(4, 4), 1};
    const double d = optimal_step(coordinate_forms(0, state, cov, cb), gamma[0]);
    expect(gamma[0] + d >= 0.0 && std::abs(d + 50.0) < 1e-9, "step should clip to -gamma_i");
  });

  list.emplace_back("detector: zero step leaves inverse and reward unchanged", [] {
    const Codebook cb = generate_codebook(8, 4, 3, false);
    SigmaState state = SigmaState::initial(4, 1.0);
    const CMatrix before = state.sigma_inv;
    apply_rank_one_update(state, 1, 0.0, cb);
    expect(state.sigma_inv == before, "inverse changed");
    expect(step_reward({1.0, 2.0}, 0.0) == 0.0, "reward of a zero step");
  });

  list.emplace_back("detector: greedy branch picks the argmax", [] {
    RVector psi(4);
    psi << 0, 5, 1, 5;
    expect(greedy_coordinate(psi) == 1, "argmax should be the lowest maximizer");
  });

  list.emplace_back("detector: pure noise input stays at zero", [] {
    const Codebook cb = generate_codebook(10, 4, 8, false);
    const SampleCovariance cov{CMatrix::Identity(4, 4), 1};
    DetectorConfig cfg;
    cfg.q_total = 64;
    cfg.q_mod = 8;
    Rng rng = make_rng(1);
    const auto result = run_detection(cov, cb, cfg, rng);
    expect(!result.failure && result.gamma.cwiseAbs().maxCoeff() < 1e-12, "gamma moved off zero");
  });

  list.emplace_back("detector: threshold limits", [] {
    GammaVector gamma(4);
    gamma << 0.0, 0.3, 0.0, 2.0;
    expect(threshold_decide(GammaVector::Zero(4), 0.0).empty(), "zero gamma should give no indices");
    expect(threshold_decide(gamma, 0.0) == std::vector<Index>{1, 3}, "zeta = 0 should keep positives");
  });

  list.emplace_back("detector: estimation error", [] {
    GammaVector a = GammaVector::Zero(3);
    GammaVector b = a;
    b[2] = 1.0;
    expect(estimation_error(a, a) == 0.0 && estimation_error(b, a) == 1.0, "e_gamma mismatch");
  });

  list.emplace_back("system: infinite threshold lists nothing", [] {
    ScenarioConfig cfg;
    cfg.k_a = 2;
    cfg.m = 4;
    cfg.d = 8;
    cfg.tree = TreeCodeSpec::from_profile(4, {4, 2, 2}, 3);
    cfg.detector.q_total = 16;
    cfg.detector.q_mod = 4;
    cfg.detector.zeta = std::numeric_limits<double>::infinity();
    const ErrorReport r = run_trial(cfg, 1);
    expect(r.decoded == 0 && r.p_md == 1.0 && r.p_fa == 0.0, "expected p_md = 1, p_fa = 0");
  });

  list.emplace_back("system: duplicate messages count once", [] {
    Rng rng = make_rng(5);
    const Bits m1 = random_message(12, rng);
    const Bits m2 = random_message(12, rng);
    const std::vector<Bits> sent{m1, m1, m2};
    const std::vector<Bits> listed{m1};
    const auto [p_md, p_fa] = error_rates(sent, listed);
    expect(close(p_md, 1.0 / 3.0, 1e-15) && p_fa == 0.0, "p_md should be 1/3 over all K_a terms");
  });

  list.emplace_back("errors: infeasible profile is rejected", [] {
    bool thrown = false;
    try {
      TreeCodeSpec::from_profile(4, {2, 2, 2}, 1).validate();
    } catch (const InvalidSpec&) {
      thrown = true;
    }
    expect(thrown, "a first section with parity bits must be rejected");
  });

  return list;
}

}  // namespace

std::vector<CheckOutcome> run_self_checks() {
  std::vector<CheckOutcome> out;
  for (const auto& [name, fn] : checks()) {
    CheckOutcome outcome{name, true, {}};
    try {
      fn();
    } catch (const CheckFailed& f) {
      outcome.passed = false;
      outcome.detail = f.why;
    } catch (const std::exception& e) {
      outcome.passed = false;
      outcome.detail = std::string("unexpected exception: ") + e.what();
    }
    out.push_back(std::move(outcome));
  }
  return out;
}

}  // namespace ura
