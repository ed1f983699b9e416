// Library tour: dimensions of H3, a certificate, and one game per feedback model.
#include <cstdio>

#include "mlonline/mlonline.hpp"

using namespace mlonline;

int main() {
  // h_i(x) = Y \ {i}
  const HypothesisClass h3({"1", "2", "3"}, {"x"}, {"h1", "h2", "h3"},
                           {LabelSet::of({1, 2}), LabelSet::of({0, 2}), LabelSet::of({0, 1})});
  auto eng = std::make_shared<DimensionEngine>(h3);
  const auto V = h3.everyone();
  std::printf("LDS=%u LDK=%u LDU=%u\n", eng->lds(V), eng->ldk(V), eng->ldu(V));

  for (auto model : {FeedbackModel::Unknown, FeedbackModel::Known, FeedbackModel::Set}) {
    const auto cert = extract_certificate(*eng, V, model);
    SoaLearner soa(eng, model);
    ReplayAdversary adv(h3, cert);
    const auto tr = run_game(soa, adv, model, 10, 1);
    std::printf("%-7s certificate value %u, verified %d; SOA vs replay: %zu mistakes in 10 rounds\n",
                std::string(to_string(model)).c_str(), cert.value, verify_certificate(h3, cert), tr.total_loss());
  }

  // agnostic: the linear-regret construction against the uniform learner
  const auto rep = monte_carlo(
      h3, [] { return std::make_unique<UniformLearner>(3, FeedbackModel::Unknown); },
      [&](std::uint64_t s) { return std::make_unique<H3LinearAdversary>(h3, s); },
      {FeedbackModel::Unknown, 90, 500, 42, 1, false});
  std::printf("uniform learner, T=90: regret %.2f +- %.2f\n", rep.regret().mean, rep.regret().se);
}
