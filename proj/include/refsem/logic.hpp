#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "refsem/scene.hpp"

namespace refsem::logic {

// Boolean mask over a world's objects, entry i for object i.
using Mask = std::vector<bool>;

// Truth value for every point of the finite object universe, indexed by
// scene::universe_index.
using ObjectPredicate = std::vector<bool>;

enum class Kind { kAtom, kNot, kAnd, kOr };

// Immutable logical form over attribute atoms: atom | not | and | or.
// Copies are cheap (shared subtrees).
class Form {
 public:
  static Form atom(std::string attribute, std::string value);
  static Form negation(Form child);
  static Form conjunction(Form left, Form right);
  static Form disjunction(Form left, Form right);

  Kind kind() const;
  int size() const;  // node count

  // Atom accessors; throw ArgumentError on other kinds.
  const std::string& attribute() const;
  const std::string& value() const;

  // Child accessors. child() is the negation operand; left()/right() the
  // binary operands.
  const Form& child() const;
  const Form& left() const;
  const Form& right() const;

  // Structural equality (not semantic; see equivalent()).
  bool operator==(const Form& other) const;
  bool operator!=(const Form& other) const { return !(*this == other); }

 private:
  struct Node;
  explicit Form(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Knobs for the recursive form sampler.
struct FormSamplerConfig {
  int max_size = 7;
  double negation_prob = 0.25;
  double binary_prob = 0.45;
};

// Canonical text: lowercase operators, single spaces, no redundant parens.
std::string print(const Form& form);

// Parse the s-expression grammar:
//   form := atom | "(not " form ")" | "(and " form " " form ")"
//         | "(or " form " " form ")"
//   atom := "(" attr-name " " value-name ")"
// Unknown attributes/values are rejected against `schema`. Errors carry the
// byte offset of the offending token.
Form parse(std::string_view text, const scene::Schema& schema);

// Denotation of `form` on `world`: entry i true iff object i satisfies it.
Mask evaluate(const Form& form, const scene::World& world,
              const scene::Schema& schema);

// Truth value of `form` on a single object.
bool satisfies(const Form& form, const scene::Object& obj,
               const scene::Schema& schema);

// Truth table over the whole object universe.
ObjectPredicate predicate(const Form& form, const scene::Schema& schema);

// Exact semantic equivalence via exhaustive universe enumeration.
bool equivalent(const Form& a, const Form& b, const scene::Schema& schema);

// Random form of size <= config.max_size; negation/binary nodes are emitted
// with the configured probabilities when the size budget allows, atoms
// otherwise. Deterministic per seed.
Form sample_form(std::uint64_t rng_seed, const scene::Schema& schema,
                 const FormSamplerConfig& config);
Form sample_form(Rng& rng, const scene::Schema& schema,
                 const FormSamplerConfig& config);

// The form whose semantic equivalence class occurs most often in `forms`.
// The class representative (and the tie-break between classes) is the
// lexicographically least canonical print.
Form most_frequent_form(const std::vector<Form>& forms,
                        const scene::Schema& schema);

}  // namespace refsem::logic
