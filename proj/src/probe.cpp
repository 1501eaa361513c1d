#include "refsem/probe.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Dense>
#include <json.hpp>

#include "refsem/io.hpp"

namespace refsem::probe {

namespace {

constexpr std::string_view kOperatorMagic = "RSOP";

// Positive-object masks of the original scene, keyed by full assignment.
std::unordered_set<std::int64_t> target_assignments(const scene::Scene& s,
                                                    const scene::Schema& schema) {
  std::unordered_set<std::int64_t> out;
  for (int j = 0; j < s.world.size(); ++j) {
    if (s.target[j]) {
      out.insert(scene::universe_index(schema, s.world.objects[j]));
    }
  }
  return out;
}

meaning::MeaningTable random_table(std::uint64_t seed,
                                   const meaning::WorldSample& sample) {
  Rng rng(seed);
  meaning::MeaningTable table;
  table.rows.reserve(sample.worlds.size());
  for (const scene::World& world : sample.worlds) {
    logic::Mask row(world.size());
    for (int j = 0; j < world.size(); ++j) row[j] = rng.coin(0.5);
    table.rows.push_back(std::move(row));
  }
  return table;
}

meaning::MeaningTable literal_table(const scene::Scene& scene,
                                    const meaning::WorldSample& sample) {
  const auto targets = target_assignments(scene, sample.schema);
  meaning::MeaningTable table;
  table.rows.reserve(sample.worlds.size());
  for (const scene::World& world : sample.worlds) {
    logic::Mask row(world.size());
    for (int j = 0; j < world.size(); ++j) {
      row[j] = targets.count(
                   scene::universe_index(sample.schema, world.objects[j])) > 0;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Literal prediction for a transformed message built from two source scenes:
// accept an object when it literally matches both scenes' targets (and) or
// either one (or).
meaning::MeaningTable literal_table_combined(const scene::Scene& a,
                                             const scene::Scene& b,
                                             BinaryOp op,
                                             const meaning::WorldSample& sample) {
  const auto ta = target_assignments(a, sample.schema);
  const auto tb = target_assignments(b, sample.schema);
  meaning::MeaningTable table;
  table.rows.reserve(sample.worlds.size());
  for (const scene::World& world : sample.worlds) {
    logic::Mask row(world.size());
    for (int j = 0; j < world.size(); ++j) {
      const std::int64_t u =
          scene::universe_index(sample.schema, world.objects[j]);
      const bool in_a = ta.count(u) > 0;
      const bool in_b = tb.count(u) > 0;
      row[j] = op == BinaryOp::kAnd ? (in_a && in_b) : (in_a || in_b);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

struct Accumulator {
  double object_level = 0.0;
  double world_level = 0.0;
  double table_level = 0.0;
  std::int64_t count = 0;

  void add(const meaning::Agreement& a) {
    object_level += a.object_level;
    world_level += a.world_level;
    table_level += a.table_level;
    ++count;
  }

  ReportRow mean(std::string name) const {
    const double n = static_cast<double>(count);
    return ReportRow{std::move(name), object_level / n, world_level / n,
                     table_level / n, count};
  }
};

// Aligned-pair indices grouped by the universe truth table of their form.
std::unordered_map<logic::ObjectPredicate, std::vector<int>> group_by_predicate(
    const std::vector<AlignedPair>& aligned, const scene::Schema& schema,
    std::vector<logic::ObjectPredicate>* predicates) {
  std::unordered_map<logic::ObjectPredicate, std::vector<int>> groups;
  predicates->reserve(aligned.size());
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    predicates->push_back(logic::predicate(aligned[i].form, schema));
    groups[predicates->back()].push_back(static_cast<int>(i));
  }
  return groups;
}

}  // namespace

std::string_view theory_name(TheoryKind kind) {
  switch (kind) {
    case TheoryKind::kRandom:
      return "random";
    case TheoryKind::kLiteral:
      return "literal";
    case TheoryKind::kHuman:
      return "human";
  }
  throw ArgumentError("unknown theory kind");
}

std::string_view role_name(OpRole role) {
  switch (role) {
    case OpRole::kNegation:
      return "negation";
    case OpRole::kConjunction:
      return "conjunction";
    case OpRole::kDisjunction:
      return "disjunction";
  }
  throw ArgumentError("unknown operator role");
}

meaning::MeaningTable theory_table(const Theory& theory,
                                   const scene::Scene& scene,
                                   const std::vector<logic::Form>& annotations,
                                   const meaning::WorldSample& sample) {
  switch (theory.kind) {
    case TheoryKind::kRandom:
      return random_table(theory.seed, sample);
    case TheoryKind::kLiteral:
      scene::validate(scene, sample.schema);
      return literal_table(scene, sample);
    case TheoryKind::kHuman: {
      if (annotations.empty()) {
        throw ArgumentError("human theory requires at least one annotation");
      }
      const logic::Form form =
          logic::most_frequent_form(annotations, sample.schema);
      return meaning::table_of_form(form, sample);
    }
  }
  throw ArgumentError("unknown theory kind");
}

const ReportRow& AgreementReport::row(std::string_view name) const {
  for (const ReportRow& r : rows) {
    if (r.name == name) return r;
  }
  throw ArgumentError("report has no row named '" + std::string(name) + "'");
}

AgreementReport evaluate_theories(const net::ModelParams& params,
                                  const scene::Dataset& dataset,
                                  const meaning::WorldSample& sample,
                                  std::uint64_t random_seed) {
  if (dataset.empty()) throw ArgumentError("evaluate_theories on empty dataset");
  Accumulator random_acc, literal_acc, human_acc;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const scene::AnnotatedScene& record = dataset[i];
    const net::MessageVector f =
        net::encode(params, record.scene, sample.schema);
    const meaning::MeaningTable behavior =
        meaning::table_of_message(params, f, sample);
    const Theory random = Theory::random(index_seed(random_seed, i));
    random_acc.add(meaning::agreement(
        theory_table(random, record.scene, record.forms, sample), behavior));
    literal_acc.add(meaning::agreement(
        theory_table(Theory::literal(), record.scene, record.forms, sample),
        behavior));
    human_acc.add(meaning::agreement(
        theory_table(Theory::human(), record.scene, record.forms, sample),
        behavior));
  }
  AgreementReport report;
  report.rows = {random_acc.mean("random"), literal_acc.mean("literal"),
                 human_acc.mean("human")};
  if (report.rows[2].object_level < report.rows[1].object_level) {
    report.notes.push_back(
        "flag: human theory scores below the literal theory at the object "
        "level");
  }
  report.sample_seed = sample.seed;
  report.sample_k = sample.size();
  return report;
}

std::vector<AlignedPair> collect_alignments(const net::ModelParams& params,
                                            const scene::Dataset& dataset,
                                            const meaning::WorldSample& sample) {
  std::vector<AlignedPair> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const scene::AnnotatedScene& record = dataset[i];
    const net::MessageVector f =
        net::encode(params, record.scene, sample.schema);
    const meaning::MeaningTable behavior =
        meaning::table_of_message(params, f, sample);
    for (const logic::Form& form : record.forms) {
      if (meaning::table_of_form(form, sample) == behavior) {
        out.push_back(
            AlignedPair{form, f, record.scene, static_cast<int>(i)});
      }
    }
  }
  return out;
}

std::vector<UnaryPair> collect_negation_pairs(
    const std::vector<AlignedPair>& aligned, const scene::Schema& schema) {
  std::vector<logic::ObjectPredicate> predicates;
  const auto groups = group_by_predicate(aligned, schema, &predicates);
  std::vector<UnaryPair> out;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    logic::ObjectPredicate complement = predicates[i];
    complement.flip();
    const auto it = groups.find(complement);
    if (it == groups.end()) continue;
    for (int j : it->second) {
      out.emplace_back(aligned[i].message, aligned[j].message);
    }
  }
  return out;
}

std::vector<BinaryTriple> collect_binary_triples(
    const std::vector<AlignedPair>& aligned, const scene::Schema& schema,
    BinaryOp op) {
  std::vector<logic::ObjectPredicate> predicates;
  const auto groups = group_by_predicate(aligned, schema, &predicates);
  std::vector<BinaryTriple> out;
  const std::size_t n = aligned.size();
  logic::ObjectPredicate combined;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      combined = predicates[i];
      if (op == BinaryOp::kAnd) {
        for (std::size_t b = 0; b < combined.size(); ++b) {
          combined[b] = combined[b] && predicates[j][b];
        }
      } else {
        for (std::size_t b = 0; b < combined.size(); ++b) {
          combined[b] = combined[b] || predicates[j][b];
        }
      }
      const auto it = groups.find(combined);
      if (it == groups.end()) continue;
      for (int t : it->second) {
        out.push_back(BinaryTriple{aligned[i].message, aligned[j].message,
                                   aligned[t].message});
      }
    }
  }
  return out;
}

namespace {

LinearOperator solve_normal_equations(const MatrixXd& cross,
                                      const MatrixXd& gram, double ridge,
                                      OpRole role) {
  const auto d = gram.rows();
  LinearOperator op;
  op.ridge = ridge;
  op.role = role;
  if (ridge > 0.0) {
    MatrixXd regularized = gram;
    regularized.diagonal().array() += ridge;
    op.matrix = Eigen::LDLT<MatrixXd>(regularized)
                    .solve(cross.transpose())
                    .transpose();
  } else {
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(gram);
    if (qr.rank() < d) {
      throw SingularSystemError(
          "least-squares system is rank-deficient (rank " +
          std::to_string(qr.rank()) + " of " + std::to_string(d) +
          "); supply a positive ridge or more pairs");
    }
    op.matrix = qr.solve(cross.transpose()).transpose();
  }
  if (!op.matrix.allFinite()) {
    throw SingularSystemError("least-squares solution is not finite");
  }
  return op;
}

}  // namespace

LinearOperator fit_unary_operator(const std::vector<UnaryPair>& pairs,
                                  double ridge, OpRole role) {
  if (pairs.empty()) throw ArgumentError("cannot fit an operator to no pairs");
  if (ridge < 0.0) throw ArgumentError("ridge must be non-negative");
  const auto d = pairs.front().first.size();
  MatrixXd gram = MatrixXd::Zero(d, d);   // sum f f^T
  MatrixXd cross = MatrixXd::Zero(d, d);  // sum f' f^T
  for (const UnaryPair& p : pairs) {
    if (p.first.size() != d || p.second.size() != d) {
      throw ArgumentError("operator pairs have mismatched dimensions");
    }
    gram.noalias() += p.first * p.first.transpose();
    cross.noalias() += p.second * p.first.transpose();
  }
  return solve_normal_equations(cross, gram, ridge, role);
}

LinearOperator fit_binary_operator(const std::vector<BinaryTriple>& triples,
                                   double ridge, OpRole role) {
  if (triples.empty()) {
    throw ArgumentError("cannot fit an operator to no triples");
  }
  std::vector<UnaryPair> pairs;
  pairs.reserve(triples.size());
  for (const BinaryTriple& t : triples) {
    pairs.emplace_back(t.first + t.second, t.target);
  }
  return fit_unary_operator(pairs, ridge, role);
}

AgreementReport evaluate_unary_operator(const net::ModelParams& params,
                                        const LinearOperator& op,
                                        const std::vector<AlignedPair>& items,
                                        const meaning::WorldSample& sample,
                                        std::uint64_t random_seed) {
  if (items.empty()) throw ArgumentError("no held-out items to evaluate");
  if (op.role != OpRole::kNegation) {
    throw ArgumentError("unary evaluation expects a negation operator");
  }
  Accumulator random_acc, literal_acc, logical_acc;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const AlignedPair& item = items[i];
    const net::MessageVector transformed = op.matrix * item.message;
    const meaning::MeaningTable behavior =
        meaning::table_of_message(params, transformed, sample);
    const meaning::MeaningTable logical =
        meaning::table_of_form(logic::Form::negation(item.form), sample);
    logical_acc.add(meaning::agreement(logical, behavior));
    literal_acc.add(
        meaning::agreement(literal_table(item.scene, sample), behavior));
    random_acc.add(meaning::agreement(
        random_table(index_seed(random_seed, i), sample), behavior));
  }
  AgreementReport report;
  report.rows = {random_acc.mean("random"), literal_acc.mean("literal"),
                 logical_acc.mean(std::string(role_name(op.role)))};
  report.sample_seed = sample.seed;
  report.sample_k = sample.size();
  report.notes.push_back(
      "literal row compares the source scene's literal table against the "
      "transformed-message behavior");
  return report;
}

AgreementReport evaluate_binary_operator(const net::ModelParams& params,
                                         const LinearOperator& op,
                                         const std::vector<BinaryItem>& items,
                                         const meaning::WorldSample& sample,
                                         std::uint64_t random_seed) {
  if (items.empty()) throw ArgumentError("no held-out items to evaluate");
  if (op.role == OpRole::kNegation) {
    throw ArgumentError("binary evaluation expects a conjunction or "
                        "disjunction operator");
  }
  const BinaryOp kind =
      op.role == OpRole::kConjunction ? BinaryOp::kAnd : BinaryOp::kOr;
  Accumulator random_acc, literal_acc, logical_acc;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const BinaryItem& item = items[i];
    const net::MessageVector transformed =
        op.matrix * (item.first.message + item.second.message);
    const meaning::MeaningTable behavior =
        meaning::table_of_message(params, transformed, sample);
    const logic::Form combined =
        kind == BinaryOp::kAnd
            ? logic::Form::conjunction(item.first.form, item.second.form)
            : logic::Form::disjunction(item.first.form, item.second.form);
    logical_acc.add(
        meaning::agreement(meaning::table_of_form(combined, sample), behavior));
    literal_acc.add(meaning::agreement(
        literal_table_combined(item.first.scene, item.second.scene, kind,
                               sample),
        behavior));
    random_acc.add(meaning::agreement(
        random_table(index_seed(random_seed, i), sample), behavior));
  }
  AgreementReport report;
  report.rows = {random_acc.mean("random"), literal_acc.mean("literal"),
                 logical_acc.mean(std::string(role_name(op.role)))};
  report.sample_seed = sample.seed;
  report.sample_k = sample.size();
  report.notes.push_back(
      "literal row combines the two source scenes' literal tables with the "
      "operator's connective");
  return report;
}

void save_operator(const LinearOperator& op, const std::string& path) {
  nlohmann::json meta;
  meta["role"] = std::string(role_name(op.role));
  meta["ridge"] = op.ridge;
  io::write_archive(path, kOperatorMagic, meta.dump(),
                    {io::NamedTensor{"matrix", op.matrix}});
}

LinearOperator load_operator(const std::string& path) {
  const io::Archive archive = io::read_archive(path, kOperatorMagic);
  LinearOperator op;
  try {
    const nlohmann::json meta = nlohmann::json::parse(archive.meta_json);
    const std::string role = meta.at("role").get<std::string>();
    if (role == "negation") {
      op.role = OpRole::kNegation;
    } else if (role == "conjunction") {
      op.role = OpRole::kConjunction;
    } else if (role == "disjunction") {
      op.role = OpRole::kDisjunction;
    } else {
      throw CheckpointError("unknown operator role '" + role + "'");
    }
    op.ridge = meta.at("ridge").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("'" + path + "' has a corrupt operator header: " +
                          e.what());
  }
  op.matrix = archive.tensor("matrix");
  if (op.matrix.rows() != op.matrix.cols()) {
    throw CheckpointError("operator matrix in '" + path + "' is not square");
  }
  return op;
}

PcaResult pca_project(const std::vector<VectorXd>& vectors, int k) {
  if (vectors.size() < 2) {
    throw ArgumentError("PCA requires at least two vectors");
  }
  const auto d = vectors.front().size();
  if (k < 1 || k > d) {
    throw ArgumentError("PCA component count must lie in [1, dimension]");
  }
  const auto n = static_cast<Eigen::Index>(vectors.size());
  MatrixXd data(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vectors[i].size() != d) {
      throw ArgumentError("PCA vectors have mismatched dimensions");
    }
    data.row(i) = vectors[i];
  }
  PcaResult result;
  result.mean = data.colwise().mean();
  data.rowwise() -= result.mean.transpose();
  const MatrixXd cov =
      data.transpose() * data / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error("covariance eigendecomposition failed");
  }
  const VectorXd all_values = solver.eigenvalues().cwiseMax(0.0);
  const double total = all_values.sum();

  result.directions = MatrixXd(d, k);
  result.explained_variance = VectorXd(k);
  for (int c = 0; c < k; ++c) {
    // Eigenvalues come back in increasing order; take them from the top.
    const Eigen::Index source = d - 1 - c;
    VectorXd direction = solver.eigenvectors().col(source);
    Eigen::Index anchor = 0;
    direction.cwiseAbs().maxCoeff(&anchor);
    if (direction[anchor] < 0.0) direction = -direction;
    result.directions.col(c) = direction;
    result.explained_variance[c] =
        total > 0.0 ? all_values[source] / total : 0.0;
  }

  result.coordinates.reserve(vectors.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    result.coordinates.push_back(result.directions.transpose() *
                                 data.row(i).transpose());
  }
  return result;
}

}  // namespace refsem::probe
