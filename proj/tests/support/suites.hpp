#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "depthguard/attack.hpp"
#include "depthguard/data.hpp"
#include "depthguard/metrics.hpp"
#include "depthguard/network.hpp"
#include "depthguard/serialize.hpp"
#include "support/gradcheck.hpp"

// Property suites shared by the unit tests and the acceptance binary. Each
// returns named outcomes so callers can report every failure.

namespace depthguard::testing {

struct Check {
  std::string name;
  bool ok = false;
};

inline bool all_ok(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (!c.ok) return false;
  return true;
}

inline Tensor depth_values(std::initializer_list<double> v) {
  return Tensor::from_values({1, 1, v.size()}, v, Dtype::f64);
}

inline bool same_report(const EvalReport& a, const EvalReport& b, double tol = 0.0) {
  const auto close = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  return close(a.rmse, b.rmse) && close(a.rel, b.rel) && close(a.log10, b.log10) && close(a.delta1, b.delta1) &&
         close(a.delta2, b.delta2) && close(a.delta3, b.delta3);
}

inline std::vector<Check> metric_suite() {
  std::vector<Check> out;
  Rng rng(77);
  const Tensor y = random_tensor({1, 6, 5}, rng, 0.5, 10);

  // Per-image examples.
  const EvalReport same = image_metrics(y, y);
  out.push_back({"identical maps: rmse 0", same.rmse == 0.0});
  out.push_back({"identical maps: rel 0, log10 0, deltas 1",
                 same.rel == 0.0 && same.log10 == 0.0 && same.delta1 == 1.0 && same.delta2 == 1.0 &&
                     same.delta3 == 1.0});
  out.push_back({"rmse([0,2] vs [1,1]) = 1", rmse(depth_values({0, 2}), depth_values({1, 1})) == 1.0});
  const EvalReport half = image_metrics(depth_values({1}), depth_values({2}));
  out.push_back({"ybar=2, y=1: rel 0.5", half.rel == 0.5});
  out.push_back({"ybar=2, y=1: log10 0.30103", std::abs(half.log10 - 0.30103) < 5e-6});
  out.push_back({"ybar=2, y=1: deltas 0,0,0", half.delta1 == 0.0 && half.delta2 == 0.0 && half.delta3 == 0.0});
  const EvalReport near = image_metrics(depth_values({1}), depth_values({1.9}));
  out.push_back({"ratio 1.9 passes only delta3", near.delta1 == 0.0 && near.delta2 == 0.0 && near.delta3 == 1.0});

  // Homogeneity and scale invariance.
  bool homogeneous = true, invariant = true, nested = true;
  for (int i = 0; i < 1000; ++i) {
    const Tensor a = random_tensor({1, 4, 4}, rng, 0.5, 10);
    const Tensor b = random_tensor({1, 4, 4}, rng, 0.5, 10);
    const EvalReport r = image_metrics(a, b);
    nested = nested && r.delta1 <= r.delta2 && r.delta2 <= r.delta3;
    if (i < 200) {
      const double s = rng.uniform(0.1, 10);
      const Tensor as = scalar_mul(a, s), bs = scalar_mul(b, s);
      const EvalReport rs = image_metrics(as, bs);
      homogeneous = homogeneous && std::abs(rs.rmse - s * r.rmse) <= 1e-6 * std::max(1.0, s * r.rmse);
      invariant = invariant && std::abs(rs.rel - r.rel) <= 1e-6 && std::abs(rs.log10 - r.log10) <= 1e-6 &&
                  std::abs(rs.delta1 - r.delta1) <= 1e-6 && std::abs(rs.delta2 - r.delta2) <= 1e-6 &&
                  std::abs(rs.delta3 - r.delta3) <= 1e-6;
    }
  }
  out.push_back({"delta nesting on 1000 random pairs", nested});
  out.push_back({"rmse(a y, a ybar) = a rmse(y, ybar)", homogeneous});
  out.push_back({"rel, log10, deltas scale-invariant to 1e-6", invariant});

  // Dataset aggregation.
  Dataset one;
  one.records.push_back({random_tensor({3, 16, 16}, rng, 0, 1), random_tensor({1, 8, 8}, rng, 1, 9), 1});
  const Tensor est = random_tensor({1, 8, 8}, rng, 1, 9);
  const EvalReport single = evaluate_dataset([&](std::size_t) { return est; }, one);
  out.push_back({"single-sample dataset equals per-image metrics",
                 same_report(single, image_metrics(est, one.records[0].depth)) && single.n_samples == 1});

  Dataset many, doubled;
  std::vector<Tensor> preds;
  for (int i = 0; i < 5; ++i) {
    many.records.push_back({random_tensor({3, 16, 16}, rng, 0, 1), random_tensor({1, 8, 8}, rng, 1, 9), 0});
    preds.push_back(random_tensor({1, 8, 8}, rng, 1, 9));
  }
  for (int rep = 0; rep < 2; ++rep)
    for (const auto& r : many.records) doubled.records.push_back(r);
  const EvalReport base = evaluate_dataset([&](std::size_t i) { return preds[i]; }, many);
  const EvalReport twice = evaluate_dataset([&](std::size_t i) { return preds[i % 5]; }, doubled);
  out.push_back({"duplicating every sample leaves metrics unchanged", same_report(base, twice, 1e-12)});
  return out;
}

/// ‖x*−x‖∞ ≤ ε+1e-6, x* ∈ [0,1], ε=0 identity, T=1/α=ε equals FGSM.
inline std::vector<Check> attack_invariant_suite(std::size_t cases = 200) {
  const ParameterStore n = build_network(depth_spec(16, 16, {4, 8, 8}), 5);
  const ParameterStore g = build_network(saliency_spec(16, 16, {4, 8, 8}), 6);
  const DepthModel plain = plain_model(n);
  Rng rng(2024);
  bool bounded = true, in_range = true, identity = true, reduces = true;
  for (std::size_t c = 0; c < cases; ++c) {
    const Tensor x = random_tensor({3, 16, 16}, rng, 0, 1).to(Dtype::f32);
    const Tensor ybar = random_tensor({1, 8, 8}, rng, 0.5, 9.5).to(Dtype::f32);
    AttackConfig cfg;
    cfg.eps = rng.uniform(0.0, 0.3);
    cfg.iters = 1 + rng.below(6);
    cfg.objective = static_cast<LossKind>(rng.below(5));
    cfg.self_target = rng.uniform() < 0.2;
    const bool composite = rng.uniform() < 0.25;
    cfg.target = composite ? AttackTarget::composite_c : AttackTarget::plain_n;
    const auto run = [&](const AttackConfig& a) {
      return composite ? attack_composite(n, g, x, ybar, a).x_star : ifgsm(plain, x, ybar, a).x_star;
    };
    const Tensor xs = run(cfg);
    const auto xv = x.values(), sv = xs.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      bounded = bounded && std::abs(sv[i] - xv[i]) <= cfg.eps + 1e-6;
      in_range = in_range && sv[i] >= 0.0 && sv[i] <= 1.0;
    }
    AttackConfig zero = cfg;
    zero.eps = 0.0;
    identity = identity && run(zero).bitwise_equal(x);
    if (!composite) {
      AttackConfig one = cfg;
      one.iters = 1;
      one.alpha_mode = AlphaMode::eps_split;
      one.self_target = false;
      reduces = reduces && ifgsm(plain, x, ybar, one).x_star.bitwise_equal(fgsm(plain, x, ybar, cfg.eps, cfg.objective).x_star);
    }
  }
  return {{"l-inf bound eps + 1e-6", bounded},
          {"x* within [0,1]", in_range},
          {"eps = 0 gives x* == x bitwise", identity},
          {"ifgsm(T=1, alpha=eps) == fgsm bitwise", reduces}};
}

inline bool throws_format(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == ErrorCode::format;
  }
  return false;
}

/// Bit-exact DGT1/DGW1/DGD1 round-trips and loud failure on corruption.
inline std::vector<Check> format_suite(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Check> out;
  Rng rng(31);

  bool tensors = true;
  for (Dtype dt : {Dtype::f32, Dtype::f64}) {
    const Tensor t = random_tensor({2, 3, 5}, rng).to(dt);
    save_tensor(dir / "t.dgt", t);
    const Tensor back = load_tensor(dir / "t.dgt");
    tensors = tensors && back.bitwise_equal(t) && back.dtype() == dt && encode_tensor(back) == encode_tensor(t);
  }
  out.push_back({"DGT1 round-trip bit-exact (f32, f64)", tensors});

  ParameterStore p = build_network(depth_spec(64, 48), 3);
  p.tag = ModelTag::N;
  save_checkpoint(p, dir / "a.dgw");
  const ParameterStore q = load_checkpoint(dir / "a.dgw");
  save_checkpoint(q, dir / "b.dgw");
  out.push_back({"DGW1 round-trip bit-exact",
                 q.bitwise_equal(p) && read_file(dir / "a.dgw") == read_file(dir / "b.dgw")});

  Dataset ds = synth_generate(5, 4, 32, 32);
  ds.provenance = "attack=ifgsm-l1\neps=0.05\n";
  save_dataset(dir / "a.dgd", ds);
  const Dataset back = load_dataset(dir / "a.dgd");
  bool same = back.size() == ds.size() && back.provenance == ds.provenance;
  for (std::size_t i = 0; same && i < ds.size(); ++i)
    same = back.records[i].image.bitwise_equal(ds.records[i].image) &&
           back.records[i].depth.bitwise_equal(ds.records[i].depth) &&
           back.records[i].scene_seed == ds.records[i].scene_seed;
  save_dataset(dir / "b.dgd", back);
  out.push_back({"DGD1 round-trip bit-exact", same && read_file(dir / "a.dgd") == read_file(dir / "b.dgd")});
  out.push_back({"empty DGD1 round-trips", decode_dataset(encode_dataset(Dataset{})).size() == 0});

  // Every single-byte corruption and every truncation must fail loudly.
  const auto tensor_bytes = encode_tensor(random_tensor({2, 2}, rng));
  const auto ckpt_bytes = read_file(dir / "a.dgw");
  const auto data_bytes = read_file(dir / "a.dgd");
  bool truncations = true;
  for (std::size_t cut = 0; cut < tensor_bytes.size(); ++cut)
    truncations = truncations && throws_format([&] { decode_tensor(std::span(tensor_bytes.data(), cut)); });
  for (std::size_t cut = 0; cut < ckpt_bytes.size(); cut += 97)
    truncations = truncations && throws_format([&] { decode_checkpoint(std::span(ckpt_bytes.data(), cut)); });
  for (std::size_t cut = 0; cut < data_bytes.size(); cut += 101)
    truncations = truncations && throws_format([&] { decode_dataset(std::span(data_bytes.data(), cut)); });
  out.push_back({"truncated DGT1/DGW1/DGD1 fail with format errors", truncations});

  bool payload = true;
  const std::size_t provenance_start = data_bytes.size() - ds.provenance.size() - 4;
  for (std::size_t at = 8; at < provenance_start; at += 37) {
    auto bad = data_bytes;
    bad[at] ^= 0x5a;
    payload = payload && throws_format([&] { decode_dataset(bad); });
  }
  out.push_back({"corrupted DGD1 record bytes are detected", payload});

  bool headers = true;
  for (std::size_t at = 0; at < 18; ++at) {
    auto bad = ckpt_bytes;
    bad[at] ^= 0x5a;
    headers = headers && throws_format([&] { decode_checkpoint(bad); });
  }
  auto trailer = ckpt_bytes;
  trailer[trailer.size() - 1] ^= 0x5a;  // dtype code
  headers = headers && throws_format([&] { decode_checkpoint(trailer); });
  out.push_back({"corrupted DGW1 header and trailer are detected", headers});
  return out;
}

}  // namespace depthguard::testing
