#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "refsem/dataset.hpp"
#include "refsem/logic.hpp"
#include "refsem/meaning.hpp"
#include "refsem/net.hpp"
#include "refsem/scene.hpp"

namespace refsem::probe {

using net::MatrixXd;
using net::VectorXd;

// ---------------------------------------------------------------------------
// Theories of model behavior
// ---------------------------------------------------------------------------

enum class TheoryKind { kRandom, kLiteral, kHuman };

struct Theory {
  TheoryKind kind = TheoryKind::kRandom;
  std::uint64_t seed = 0;  // consumed by the random theory only

  static Theory random(std::uint64_t seed) {
    return Theory{TheoryKind::kRandom, seed};
  }
  static Theory literal() { return Theory{TheoryKind::kLiteral, 0}; }
  static Theory human() { return Theory{TheoryKind::kHuman, 0}; }
};

std::string_view theory_name(TheoryKind kind);

// What the theory predicts the model will do on every sampled world:
//   random  — every entry an independent fair coin drawn from theory.seed;
//   literal — object accepted iff its full attribute assignment equals that
//             of some target object of the original scene;
//   human   — the denotations of the most frequent annotation.
meaning::MeaningTable theory_table(const Theory& theory,
                                   const scene::Scene& scene,
                                   const std::vector<logic::Form>& annotations,
                                   const meaning::WorldSample& sample);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string name;
  double object_level = 0.0;
  double world_level = 0.0;
  double table_level = 0.0;
  std::int64_t count = 0;
};

struct AgreementReport {
  std::vector<ReportRow> rows;
  std::uint64_t sample_seed = 0;
  int sample_k = 0;
  std::vector<std::string> notes;

  const ReportRow& row(std::string_view name) const;
};

// Mean agreement between each theory's table and the model's own table,
// over every scene of `dataset`. Per-scene random-theory seeds are derived
// from `random_seed`.
AgreementReport evaluate_theories(const net::ModelParams& params,
                                  const scene::Dataset& dataset,
                                  const meaning::WorldSample& sample,
                                  std::uint64_t random_seed);

// ---------------------------------------------------------------------------
// Denotational alignment
// ---------------------------------------------------------------------------

// A (form, message) pair whose meaning tables matched exactly on the sample,
// plus the scene the message came from.
struct AlignedPair {
  logic::Form form;
  net::MessageVector message;
  scene::Scene scene;
  int scene_index = 0;
};

// For every scene and every annotation e with rep(e) = rep(encode(scene)).
std::vector<AlignedPair> collect_alignments(const net::ModelParams& params,
                                            const scene::Dataset& dataset,
                                            const meaning::WorldSample& sample);

// ---------------------------------------------------------------------------
// Linear operators
// ---------------------------------------------------------------------------

enum class OpRole { kNegation, kConjunction, kDisjunction };

std::string_view role_name(OpRole role);

struct LinearOperator {
  MatrixXd matrix;
  double ridge = 0.0;
  OpRole role = OpRole::kNegation;
};

using UnaryPair = std::pair<net::MessageVector, net::MessageVector>;

struct BinaryTriple {
  net::MessageVector first;
  net::MessageVector second;
  net::MessageVector target;
};

enum class BinaryOp { kAnd, kOr };

// All ordered pairs ((e,f),(e',f')) of aligned pairs with e' equivalent to
// (not e); both orientations appear since double negation restores e.
std::vector<UnaryPair> collect_negation_pairs(
    const std::vector<AlignedPair>& aligned, const scene::Schema& schema);

// All triples of aligned pairs with e'' equivalent to (op e e'); both
// argument orders are emitted so the fitted map sees symmetric evidence.
std::vector<BinaryTriple> collect_binary_triples(
    const std::vector<AlignedPair>& aligned, const scene::Schema& schema,
    BinaryOp op);

// argmin_N sum ||N f - f'||^2 + ridge ||N||_F^2 via the normal equations.
// ridge = 0 demands full rank and raises SingularSystemError otherwise.
LinearOperator fit_unary_operator(const std::vector<UnaryPair>& pairs,
                                  double ridge,
                                  OpRole role = OpRole::kNegation);

// argmin_M sum ||M f + M f' - f''||^2 + ridge ||M||_F^2; identical to the
// unary fit on the summed inputs f + f'.
LinearOperator fit_binary_operator(const std::vector<BinaryTriple>& triples,
                                   double ridge, OpRole role);

// Held-out evaluation items: the operator row compares the model's behavior
// on the transformed message against the logical prediction; literal and
// random rows are baselines predicting the same transformed behavior.
AgreementReport evaluate_unary_operator(const net::ModelParams& params,
                                        const LinearOperator& op,
                                        const std::vector<AlignedPair>& items,
                                        const meaning::WorldSample& sample,
                                        std::uint64_t random_seed);

struct BinaryItem {
  AlignedPair first;
  AlignedPair second;
};

AgreementReport evaluate_binary_operator(const net::ModelParams& params,
                                         const LinearOperator& op,
                                         const std::vector<BinaryItem>& items,
                                         const meaning::WorldSample& sample,
                                         std::uint64_t random_seed);

void save_operator(const LinearOperator& op, const std::string& path);
LinearOperator load_operator(const std::string& path);

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaResult {
  std::vector<VectorXd> coordinates;  // k-dimensional, one per input vector
  VectorXd explained_variance;        // fraction per component, non-increasing
  MatrixXd directions;                // principal directions, one per column
  VectorXd mean;
};

// Mean-centered covariance eigendecomposition; the sign of each direction is
// fixed by making its largest-magnitude coordinate positive.
PcaResult pca_project(const std::vector<VectorXd>& vectors, int k);

}  // namespace refsem::probe
