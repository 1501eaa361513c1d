#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "refsem/probe.hpp"

using namespace refsem;
using logic::Form;
using net::MatrixXd;
using net::VectorXd;
using probe::AlignedPair;
using probe::BinaryTriple;
using probe::UnaryPair;
using scene::Object;
using scene::Scene;
using scene::Schema;
using scene::World;

namespace {

// A model whose decoder fires exactly on green objects no matter what the
// message says: a denotational oracle for the form (color green).
net::ModelParams green_detector(int hidden) {
  net::ModelConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.decoder_hidden = 4;
  cfg.feature_dim = Schema::standard().feature_dim();
  cfg.seed = 99;
  net::ModelParams p = net::init_params(cfg);  // random encoder
  p.decoder.w1.setZero();
  p.decoder.b1.setConstant(-4.0);
  p.decoder.w1(0, hidden + 0) = 8.0;  // green is color value 0
  p.decoder.w2.setZero();
  p.decoder.w2[0] = 1.0;
  p.decoder.b2[0] = -2.0;
  return p;
}

Scene scene_of(std::vector<Object> objects, std::vector<bool> target) {
  Scene sc;
  sc.world.objects = std::move(objects);
  sc.target = std::move(target);
  return sc;
}

scene::AnnotatedScene annotated(Scene sc, std::vector<Form> forms,
                                const Schema& schema) {
  scene::AnnotatedScene rec;
  rec.scene = std::move(sc);
  rec.forms = std::move(forms);
  for (const Form& f : rec.forms)
    rec.form_denotations.push_back(logic::evaluate(f, rec.scene.world, schema));
  return rec;
}

AlignedPair aligned_pair(const Form& form, const VectorXd& message) {
  return AlignedPair{form, message, scene_of({Object{{0, 0}}}, {true}), 0};
}

VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

bool same(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

double unary_objective(const MatrixXd& n, const std::vector<UnaryPair>& pairs) {
  double total = 0.0;
  for (const auto& [f, fp] : pairs) total += (n * f - fp).squaredNorm();
  return total;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("refsem_probe_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

}  // namespace

TEST_CASE("literal theory marks exact attribute matches") {
  const Schema s = Schema::standard();
  // original scene: a single green triangle, targeted
  const Scene sc = scene_of({Object{{0, 0}}}, {true});

  meaning::WorldSample sample;
  sample.schema = s;
  sample.worlds.push_back(World{{Object{{0, 0}}, Object{{0, 1}}}});  // green tri, green arch
  sample.worlds.push_back(World{{Object{{1, 0}}}});                  // tan triangle

  const auto t = probe::theory_table(probe::Theory::literal(), sc, {}, sample);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == logic::Mask{true, false});
  CHECK(t.rows[1] == logic::Mask{false});
}

TEST_CASE("literal theory ignores the order of scene objects") {
  const Schema s = Schema::standard();
  const meaning::WorldSample sample = meaning::make_sample(11, s, 8, 1, 6);
  const Scene a = scene_of({Object{{0, 0}}, Object{{2, 3}}}, {true, true});
  const Scene b = scene_of({Object{{2, 3}}, Object{{0, 0}}}, {true, true});
  CHECK(probe::theory_table(probe::Theory::literal(), a, {}, sample) ==
        probe::theory_table(probe::Theory::literal(), b, {}, sample));
}

TEST_CASE("human theory evaluates the most frequent annotation") {
  const Schema s = Schema::standard();
  const meaning::WorldSample sample = meaning::make_sample(13, s, 10, 1, 6);
  const Scene sc = scene_of({Object{{0, 0}}}, {true});
  const Form green = logic::parse("(color green)", s);
  const Form arch = logic::parse("(shape arch)", s);

  const auto t =
      probe::theory_table(probe::Theory::human(), sc, {arch, green, green}, sample);
  CHECK(t == meaning::table_of_form(green, sample));

  CHECK_THROWS_AS(probe::theory_table(probe::Theory::human(), sc, {}, sample),
                  ArgumentError);
}

TEST_CASE("random theory is seeded and near one half on average") {
  const Schema s = Schema::standard();
  const meaning::WorldSample sample = meaning::make_sample(17, s, 200, 5, 15);
  const Scene sc = scene_of({Object{{0, 0}}}, {true});

  const auto a = probe::theory_table(probe::Theory::random(5), sc, {}, sample);
  CHECK(a == probe::theory_table(probe::Theory::random(5), sc, {}, sample));
  CHECK_FALSE(a == probe::theory_table(probe::Theory::random(6), sc, {}, sample));

  const Form green = logic::parse("(color green)", s);
  const auto g = meaning::agreement(a, meaning::table_of_form(green, sample));
  CHECK(g.object_level > 0.45);
  CHECK(g.object_level < 0.55);
  CHECK(g.table_level == 0.0);
}

TEST_CASE("a decoder implementing the annotation gives perfect human agreement") {
  const Schema s = Schema::standard();
  const net::ModelParams oracle = green_detector(6);
  const meaning::WorldSample sample = meaning::make_sample(23, s, 20, 1, 10);
  const Form green = logic::parse("(color green)", s);

  scene::Dataset data;
  for (std::uint64_t i = 0; i < 12; ++i) {
    World w = scene::generate_world(index_seed(3, i), s, 2, 8);
    std::vector<bool> target(w.objects.size());
    bool any = false;
    for (size_t o = 0; o < w.objects.size(); ++o) {
      target[o] = w.objects[o].values[0] == 0;
      any = any || target[o];
    }
    if (!any) {
      w.objects[0].values[0] = 0;
      target[0] = true;
    }
    data.push_back(annotated(scene_of(w.objects, target), {green}, s));
  }

  const auto report = probe::evaluate_theories(oracle, data, sample, 71);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.row("human").object_level == 1.0);
  CHECK(report.row("human").world_level == 1.0);
  CHECK(report.row("human").table_level == 1.0);
  CHECK(report.row("human").count == 12);
  CHECK(report.row("random").object_level > 0.3);
  CHECK(report.row("random").object_level < 0.7);
  CHECK(report.row("random").table_level == 0.0);
  CHECK(report.row("literal").object_level <= 1.0);
  CHECK_THROWS_AS(report.row("nonsense"), ArgumentError);

  // deterministic given the same seeds
  const auto again = probe::evaluate_theories(oracle, data, sample, 71);
  for (size_t r = 0; r < report.rows.size(); ++r) {
    CHECK(again.rows[r].object_level == report.rows[r].object_level);
    CHECK(again.rows[r].world_level == report.rows[r].world_level);
    CHECK(again.rows[r].table_level == report.rows[r].table_level);
  }

  CHECK_THROWS_AS(probe::evaluate_theories(oracle, {}, sample, 71), ArgumentError);
}

TEST_CASE("the theory report flags a human score below the literal one") {
  const Schema s = Schema::standard();
  const net::ModelParams oracle = green_detector(6);
  const meaning::WorldSample sample = meaning::make_sample(23, s, 20, 1, 10);

  // Targets are the green objects, but the (sole, hence most frequent)
  // annotation describes the tan ones: the human theory disagrees with the
  // green-firing decoder on every green and tan object, while the literal
  // theory still gets the target assignments right.
  const Form misleading = logic::parse("(color tan)", s);
  scene::Dataset data;
  for (std::uint64_t i = 0; i < 8; ++i) {
    World w = scene::generate_world(index_seed(5, i), s, 2, 8);
    w.objects[0].values[0] = 0;  // keep at least one green target
    std::vector<bool> target(w.objects.size());
    for (size_t o = 0; o < w.objects.size(); ++o) {
      target[o] = w.objects[o].values[0] == 0;
    }
    data.push_back(annotated(scene_of(w.objects, target), {misleading}, s));
  }

  const auto report = probe::evaluate_theories(oracle, data, sample, 71);
  REQUIRE(report.row("human").object_level <
          report.row("literal").object_level);
  REQUIRE(!report.notes.empty());
  CHECK(report.notes.front().find("flag") != std::string::npos);
  CHECK(report.notes.front().find("human") != std::string::npos);

  // An honest annotation leaves the report unflagged.
  const Form green = logic::parse("(color green)", s);
  scene::Dataset honest;
  for (scene::AnnotatedScene record : data) {
    honest.push_back(annotated(record.scene, {green}, s));
  }
  const auto clean = probe::evaluate_theories(oracle, honest, sample, 71);
  REQUIRE(clean.row("human").object_level >=
          clean.row("literal").object_level);
  for (const std::string& note : clean.notes) {
    CHECK(note.find("flag") == std::string::npos);
  }
}

TEST_CASE("collect_alignments keeps exactly the denotationally matched forms") {
  const Schema s = Schema::standard();
  const net::ModelParams oracle = green_detector(6);
  const meaning::WorldSample sample = meaning::make_sample(29, s, 15, 2, 10);
  const Form green = logic::parse("(color green)", s);
  const Form tan = logic::parse("(color tan)", s);

  scene::Dataset data;
  data.push_back(annotated(scene_of({Object{{0, 0}}, Object{{1, 1}}}, {true, false}),
                           {green, tan}, s));
  data.push_back(annotated(scene_of({Object{{0, 2}}}, {true}),
                           {Form::negation(Form::negation(green))}, s));

  const auto aligned = probe::collect_alignments(oracle, data, sample);
  REQUIRE(aligned.size() == 2);  // green and not-not-green, never tan
  CHECK(aligned[0].form == green);
  CHECK(aligned[0].scene_index == 0);
  CHECK(aligned[1].scene_index == 1);
  CHECK(logic::equivalent(aligned[1].form, green, s));
  // the recorded message is the encoder output for the provenance scene
  CHECK((aligned[0].message.array() ==
         net::encode(oracle, data[0].scene, s).array())
            .all());

  CHECK(probe::collect_alignments(oracle, {}, sample).empty());
}

TEST_CASE("collect_negation_pairs matches complements in both directions") {
  const Schema s = Schema::standard();
  const Form green = logic::parse("(color green)", s);
  const Form not_green = Form::negation(green);
  const Form tan = logic::parse("(color tan)", s);

  std::vector<AlignedPair> aligned = {
      aligned_pair(green, vec({1, 0})),
      aligned_pair(green, vec({2, 0})),
      aligned_pair(not_green, vec({0, 3})),
      aligned_pair(tan, vec({9, 9})),
  };
  const auto pairs = probe::collect_negation_pairs(aligned, s);
  REQUIRE(pairs.size() == 4);  // two green->not_green plus two reversed

  int forward = 0, backward = 0;
  for (const auto& [f, fp] : pairs) {
    if (same(fp, vec({0, 3}))) {
      ++forward;
      CHECK((same(f, vec({1, 0})) || same(f, vec({2, 0}))));
    }
    if (same(f, vec({0, 3}))) ++backward;
  }
  CHECK(forward == 2);
  CHECK(backward == 2);

  CHECK(probe::collect_negation_pairs({aligned_pair(tan, vec({1}))}, s).empty());
  CHECK(probe::collect_negation_pairs({}, s).empty());
}

TEST_CASE("collect_binary_triples finds connective structure") {
  const Schema s = Schema::standard();
  const Form a = logic::parse("(color green)", s);
  const Form b = logic::parse("(shape arch)", s);
  const Form ab = Form::conjunction(a, b);

  const std::vector<AlignedPair> aligned = {
      aligned_pair(a, vec({1, 0, 0})),
      aligned_pair(b, vec({0, 1, 0})),
      aligned_pair(ab, vec({0, 0, 1})),
  };

  SUBCASE("conjunction targets, including idempotent and absorbing ones") {
    const auto triples = probe::collect_binary_triples(aligned, s, probe::BinaryOp::kAnd);
    // (a,b)->ab both orders, (x,x)->x for all three, (a,ab)->ab and
    // (b,ab)->ab both orders
    CHECK(triples.size() == 9);
    int cross = 0;
    for (const auto& t : triples)
      if (same(t.target, vec({0, 0, 1})) && !same(t.first, t.second)) ++cross;
    CHECK(cross == 6);
  }

  SUBCASE("disjunction uses absorption, not conjunction evidence") {
    const auto triples = probe::collect_binary_triples(aligned, s, probe::BinaryOp::kOr);
    // or(x,x) = x for all three, or(a,ab) = a and or(b,ab) = b both orders
    CHECK(triples.size() == 7);
    // no cross pair disjoins to the conjunction: only or(ab,ab) targets it
    for (const auto& t : triples)
      if (!same(t.first, t.second)) CHECK_FALSE(same(t.target, vec({0, 0, 1})));
  }

  SUBCASE("no matching targets means no triples") {
    const std::vector<AlignedPair> sparse = {aligned_pair(a, vec({1, 0})),
                                             aligned_pair(b, vec({0, 1}))};
    CHECK(probe::collect_binary_triples(sparse, s, probe::BinaryOp::kAnd).size() == 2);
    // and(a,a)=a, and(b,b)=b are the only hits; or-side is symmetric
    CHECK(probe::collect_binary_triples(sparse, s, probe::BinaryOp::kOr).size() == 2);
    CHECK(probe::collect_binary_triples({}, s, probe::BinaryOp::kAnd).empty());
  }
}

TEST_CASE("fit_unary_operator solves the normal equations") {
  SUBCASE("1-d oracle: pairs (1,1),(2,4) give slope 9/5") {
    const std::vector<UnaryPair> pairs = {{vec({1}), vec({1})}, {vec({2}), vec({4})}};
    const auto op = probe::fit_unary_operator(pairs, 0.0);
    CHECK(op.matrix.rows() == 1);
    CHECK(op.matrix(0, 0) == doctest::Approx(1.8).epsilon(1e-12));
  }

  SUBCASE("single exact pair (2,6) gives 3") {
    const auto op = probe::fit_unary_operator({{vec({2}), vec({6})}}, 0.0);
    CHECK(op.matrix(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("f' = -f over a spanning set recovers -I") {
    Rng rng(31);
    std::vector<UnaryPair> pairs;
    for (int i = 0; i < 12; ++i) {
      VectorXd f(5);
      for (int d = 0; d < 5; ++d) f[d] = rng.uniform_real(-1, 1);
      pairs.push_back({f, -f});
    }
    const auto op = probe::fit_unary_operator(pairs, 0.0);
    CHECK((op.matrix + MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("recovers a planted dense map to 1e-8") {
    Rng rng(37);
    MatrixXd planted(8, 8);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) planted(r, c) = rng.uniform_real(-2, 2);
    std::vector<UnaryPair> pairs;
    for (int i = 0; i < 40; ++i) {
      VectorXd f(8);
      for (int d = 0; d < 8; ++d) f[d] = rng.uniform_real(-1, 1);
      pairs.push_back({f, planted * f});
    }
    const auto op = probe::fit_unary_operator(pairs, 0.0);
    CHECK((op.matrix - planted).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("rank deficiency fails loudly without ridge, quietly with it") {
    // every input lies in a 1-d subspace of a 3-d space
    std::vector<UnaryPair> pairs;
    for (int i = 1; i <= 4; ++i)
      pairs.push_back({vec({double(i), 0, 0}), vec({0, double(i), 0})});
    CHECK_THROWS_AS(probe::fit_unary_operator(pairs, 0.0), SingularSystemError);
    const auto op = probe::fit_unary_operator(pairs, 1e-6);
    CHECK(op.matrix.allFinite());
    CHECK(op.ridge == 1e-6);
  }

  SUBCASE("argument errors") {
    CHECK_THROWS_AS(probe::fit_unary_operator({}, 0.0), ArgumentError);
    CHECK_THROWS_AS(probe::fit_unary_operator({{vec({1}), vec({1})}}, -1.0),
                    ArgumentError);
    CHECK_THROWS_AS(
        probe::fit_unary_operator({{vec({1}), vec({1, 2})}}, 0.0),
        ArgumentError);
  }
}

TEST_CASE("ridge biases the 1-d slope exactly as the closed form says") {
  // slope = sum(f f') / (sum(f^2) + ridge)
  const std::vector<UnaryPair> pairs = {{vec({1}), vec({1})}, {vec({2}), vec({4})}};
  const auto op = probe::fit_unary_operator(pairs, 0.5);
  CHECK(op.matrix(0, 0) == doctest::Approx(9.0 / 5.5).epsilon(1e-12));
}

TEST_CASE("fit_binary_operator equals the unary fit on summed inputs") {
  Rng rng(41);
  std::vector<BinaryTriple> triples;
  std::vector<UnaryPair> summed;
  for (int i = 0; i < 30; ++i) {
    VectorXd f(6), g(6), t(6);
    for (int d = 0; d < 6; ++d) {
      f[d] = rng.uniform_real(-1, 1);
      g[d] = rng.uniform_real(-1, 1);
      t[d] = rng.uniform_real(-1, 1);
    }
    triples.push_back({f, g, t});
    summed.push_back({f + g, t});
  }
  const auto binary =
      probe::fit_binary_operator(triples, 0.0, probe::OpRole::kConjunction);
  const auto unary = probe::fit_unary_operator(summed, 0.0);
  CHECK((binary.matrix - unary.matrix).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(binary.role == probe::OpRole::kConjunction);

  SUBCASE("target = sum recovers the identity") {
    std::vector<BinaryTriple> exact;
    Rng rng2(43);
    for (int i = 0; i < 20; ++i) {
      VectorXd f(6), g(6);
      for (int d = 0; d < 6; ++d) {
        f[d] = rng2.uniform_real(-1, 1);
        g[d] = rng2.uniform_real(-1, 1);
      }
      exact.push_back({f, g, f + g});
    }
    const auto op = probe::fit_binary_operator(exact, 0.0, probe::OpRole::kDisjunction);
    CHECK((op.matrix - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("swapping the two inputs changes nothing") {
    std::vector<BinaryTriple> swapped;
    for (const auto& t : triples) swapped.push_back({t.second, t.first, t.target});
    const auto op =
        probe::fit_binary_operator(swapped, 0.0, probe::OpRole::kConjunction);
    CHECK((op.matrix - binary.matrix).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("empty triples are rejected") {
    CHECK_THROWS_AS(probe::fit_binary_operator({}, 0.0, probe::OpRole::kConjunction),
                    ArgumentError);
  }
}

TEST_CASE("least-squares fits are local minima under entry perturbation") {
  Rng rng(47);
  for (int instance = 0; instance < 3; ++instance) {
    std::vector<UnaryPair> pairs;
    for (int i = 0; i < 15; ++i) {
      VectorXd f(4), fp(4);
      for (int d = 0; d < 4; ++d) {
        f[d] = rng.uniform_real(-1, 1);
        fp[d] = rng.uniform_real(-1, 1);
      }
      pairs.push_back({f, fp});
    }
    const auto op = probe::fit_unary_operator(pairs, 0.0);
    const double base = unary_objective(op.matrix, pairs);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        for (double delta : {1e-3, -1e-3}) {
          MatrixXd perturbed = op.matrix;
          perturbed(r, c) += delta;
          CHECK(unary_objective(perturbed, pairs) >= base);
        }
  }
}

TEST_CASE("operator evaluation validates roles and items") {
  const Schema s = Schema::standard();
  const net::ModelParams oracle = green_detector(3);
  const meaning::WorldSample sample = meaning::make_sample(51, s, 6, 1, 5);

  probe::LinearOperator neg;
  neg.matrix = MatrixXd::Identity(3, 3);
  neg.role = probe::OpRole::kNegation;
  probe::LinearOperator conj = neg;
  conj.role = probe::OpRole::kConjunction;

  const Form green = logic::parse("(color green)", s);
  const AlignedPair item = aligned_pair(green, vec({0.1, 0.2, 0.3}));

  CHECK_THROWS_AS(probe::evaluate_unary_operator(oracle, conj, {item}, sample, 1),
                  ArgumentError);
  CHECK_THROWS_AS(probe::evaluate_unary_operator(oracle, neg, {}, sample, 1),
                  ArgumentError);
  CHECK_THROWS_AS(
      probe::evaluate_binary_operator(oracle, neg, {probe::BinaryItem{item, item}},
                                      sample, 1),
      ArgumentError);
  CHECK_THROWS_AS(probe::evaluate_binary_operator(oracle, conj, {}, sample, 1),
                  ArgumentError);

  const auto report =
      probe::evaluate_unary_operator(oracle, neg, {item, item}, sample, 1);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].name == "random");
  CHECK(report.rows[1].name == "literal");
  CHECK(report.rows[2].name == "negation");
  CHECK(report.rows[2].count == 2);
  CHECK_FALSE(report.notes.empty());

  // the decoder is an exact green oracle and ignores the message, so the
  // negation row measures rep(green) vs rep(not green) disagreement exactly
  const auto& row = report.row("negation");
  const auto expected = meaning::agreement(
      meaning::table_of_form(Form::negation(green), sample),
      meaning::table_of_form(green, sample));
  CHECK(row.object_level == expected.object_level);

  const auto binary_report = probe::evaluate_binary_operator(
      oracle, conj, {probe::BinaryItem{item, item}}, sample, 1);
  CHECK(binary_report.rows[2].name == "conjunction");
}

TEST_CASE("operators round-trip through files") {
  TempDir dir;
  Rng rng(53);
  for (int i = 0; i < 20; ++i) {
    probe::LinearOperator op;
    const int d = 1 + static_cast<int>(rng.bounded(6));
    op.matrix.resize(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) op.matrix(r, c) = rng.uniform_real(-3, 3);
    op.ridge = rng.uniform_real(0, 1);
    op.role = static_cast<probe::OpRole>(rng.bounded(3));
    const std::string path = dir.file("op.bin");
    probe::save_operator(op, path);
    const auto back = probe::load_operator(path);
    CHECK(back.role == op.role);
    CHECK(back.ridge == op.ridge);
    CHECK((back.matrix.array() == op.matrix.array()).all());
  }

  SUBCASE("corrupt files fail loudly") {
    const std::string path = dir.file("bad.bin");
    std::ofstream(path, std::ios::binary) << "RSOPgarbage";
    CHECK_THROWS_AS(probe::load_operator(path), CheckpointError);
    std::ofstream(dir.file("worse.bin"), std::ios::binary) << "XXXX";
    CHECK_THROWS_AS(probe::load_operator(dir.file("worse.bin")), CheckpointError);
  }
}

TEST_CASE("pca projects onto deterministic principal directions") {
  SUBCASE("collinear points put all variance on the first component") {
    std::vector<VectorXd> points;
    for (int i = 0; i < 6; ++i) points.push_back(vec({1.0 * i, 2.0 * i, -1.0 * i}));
    const auto result = probe::pca_project(points, 2);
    REQUIRE(result.explained_variance.size() == 2);
    CHECK(result.explained_variance[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.explained_variance[1] == doctest::Approx(0.0).epsilon(1e-12));
    REQUIRE(result.coordinates.size() == points.size());
    for (const auto& c : result.coordinates) CHECK(c.size() == 2);
  }

  SUBCASE("the mean projects to the origin") {
    Rng rng(59);
    std::vector<VectorXd> points;
    for (int i = 0; i < 9; ++i) {
      VectorXd v(4);
      for (int d = 0; d < 4; ++d) v[d] = rng.uniform_real(-2, 2);
      points.push_back(v);
    }
    const auto result = probe::pca_project(points, 3);
    VectorXd mean = VectorXd::Zero(4);
    for (const auto& p : points) mean += p;
    mean /= points.size();
    CHECK((result.mean - mean).norm() < 1e-12);
    const VectorXd origin = result.directions.transpose() * (mean - result.mean);
    CHECK(origin.norm() < 1e-12);
    // centering also means the projected coordinates average to zero
    VectorXd avg = VectorXd::Zero(3);
    for (const auto& c : result.coordinates) avg += c;
    CHECK(avg.norm() / points.size() < 1e-12);
  }

  SUBCASE("two-dimensional hand case on the line y = x") {
    std::vector<VectorXd> points = {vec({0, 0}), vec({1, 1}), vec({2, 2}),
                                    vec({3, 3})};
    const auto result = probe::pca_project(points, 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(result.directions(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(result.directions(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(result.explained_variance[0] == doctest::Approx(1.0).epsilon(1e-12));
    // sign rule: largest coordinate positive, so the top-right point is positive
    CHECK(result.coordinates[3][0] > 0.0);
  }

  SUBCASE("explained fractions are sorted and bounded") {
    Rng rng(61);
    std::vector<VectorXd> points;
    for (int i = 0; i < 25; ++i) {
      VectorXd v(5);
      for (int d = 0; d < 5; ++d) v[d] = rng.uniform_real(-1, 1);
      points.push_back(v);
    }
    const auto result = probe::pca_project(points, 5);
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
      if (i > 0) CHECK(result.explained_variance[i] <= result.explained_variance[i - 1]);
      CHECK(result.explained_variance[i] >= 0.0);
      sum += result.explained_variance[i];
    }
    CHECK(sum <= 1.0 + 1e-12);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));  // k = full dimension
  }

  SUBCASE("argument validation") {
    CHECK_THROWS_AS(probe::pca_project({vec({1, 2})}, 1), ArgumentError);
    CHECK_THROWS_AS(probe::pca_project({vec({1, 2}), vec({3, 4})}, 3), ArgumentError);
    CHECK_THROWS_AS(probe::pca_project({vec({1, 2}), vec({3, 4})}, 0), ArgumentError);
    CHECK_THROWS_AS(probe::pca_project({vec({1, 2}), vec({3, 4, 5})}, 1),
                    ArgumentError);
  }
}
