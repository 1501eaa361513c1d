#include "refsem/logic.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <utility>

namespace refsem::logic {

struct Form::Node {
  Kind kind;
  int size = 1;
  std::string attribute;  // atom only
  std::string value;      // atom only
  std::optional<Form> first;
  std::optional<Form> second;
};

Form Form::atom(std::string attribute, std::string value) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kAtom;
  node->attribute = std::move(attribute);
  node->value = std::move(value);
  return Form(std::move(node));
}

Form Form::negation(Form child) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kNot;
  node->size = 1 + child.size();
  node->first = std::move(child);
  return Form(std::move(node));
}

Form Form::conjunction(Form left, Form right) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kAnd;
  node->size = 1 + left.size() + right.size();
  node->first = std::move(left);
  node->second = std::move(right);
  return Form(std::move(node));
}

Form Form::disjunction(Form left, Form right) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::kOr;
  node->size = 1 + left.size() + right.size();
  node->first = std::move(left);
  node->second = std::move(right);
  return Form(std::move(node));
}

Kind Form::kind() const { return node_->kind; }
int Form::size() const { return node_->size; }

const std::string& Form::attribute() const {
  if (kind() != Kind::kAtom) throw ArgumentError("attribute() on non-atom");
  return node_->attribute;
}

const std::string& Form::value() const {
  if (kind() != Kind::kAtom) throw ArgumentError("value() on non-atom");
  return node_->value;
}

const Form& Form::child() const {
  if (kind() != Kind::kNot) throw ArgumentError("child() on non-negation");
  return *node_->first;
}

const Form& Form::left() const {
  if (kind() != Kind::kAnd && kind() != Kind::kOr) {
    throw ArgumentError("left() on non-binary form");
  }
  return *node_->first;
}

const Form& Form::right() const {
  if (kind() != Kind::kAnd && kind() != Kind::kOr) {
    throw ArgumentError("right() on non-binary form");
  }
  return *node_->second;
}

bool Form::operator==(const Form& other) const {
  if (node_ == other.node_) return true;
  if (kind() != other.kind() || size() != other.size()) return false;
  switch (kind()) {
    case Kind::kAtom:
      return node_->attribute == other.node_->attribute &&
             node_->value == other.node_->value;
    case Kind::kNot:
      return child() == other.child();
    case Kind::kAnd:
    case Kind::kOr:
      return left() == other.left() && right() == other.right();
  }
  return false;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

void print_into(const Form& form, std::string& out) {
  switch (form.kind()) {
    case Kind::kAtom:
      out += '(';
      out += form.attribute();
      out += ' ';
      out += form.value();
      out += ')';
      break;
    case Kind::kNot:
      out += "(not ";
      print_into(form.child(), out);
      out += ')';
      break;
    case Kind::kAnd:
    case Kind::kOr:
      out += form.kind() == Kind::kAnd ? "(and " : "(or ";
      print_into(form.left(), out);
      out += ' ';
      print_into(form.right(), out);
      out += ')';
      break;
  }
}

}  // namespace

std::string print(const Form& form) {
  std::string out;
  print_into(form, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view text, const scene::Schema& schema)
      : text_(text), schema_(schema) {}

  Form run() {
    skip_spaces();
    Form form = parse_form();
    skip_spaces();
    if (pos_ != text_.size()) {
      throw ParseError("trailing input after form", pos_);
    }
    return form;
  }

 private:
  void skip_spaces() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  std::string token() {
    skip_spaces();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (pos_ == start) {
      throw ParseError("expected a token", pos_);
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  Form parse_form() {
    skip_spaces();
    const std::size_t open = pos_;
    expect('(');
    skip_spaces();
    const std::size_t head_pos = pos_;
    const std::string head = token();
    Form form = [&] {
      if (head == "not") {
        return Form::negation(parse_form());
      }
      if (head == "and" || head == "or") {
        Form left = parse_form();
        Form right = parse_form();
        return head == "and" ? Form::conjunction(std::move(left), std::move(right))
                             : Form::disjunction(std::move(left), std::move(right));
      }
      // Atom: head is the attribute name.
      int attr = schema_.find_attribute(head);
      if (attr < 0) {
        throw ParseError("unknown operator or attribute '" + head + "'",
                         head_pos);
      }
      skip_spaces();
      const std::size_t value_pos = pos_;
      const std::string value = token();
      if (schema_.find_value(attr, value) < 0) {
        throw ParseError("unknown value '" + value + "' for attribute '" +
                         head + "'", value_pos);
      }
      return Form::atom(head, value);
    }();
    skip_spaces();
    if (pos_ >= text_.size()) {
      throw ParseError("unbalanced parenthesis", open);
    }
    expect(')');
    return form;
  }

  std::string_view text_;
  const scene::Schema& schema_;
  std::size_t pos_ = 0;
};

}  // namespace

Form parse(std::string_view text, const scene::Schema& schema) {
  return Parser(text, schema).run();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

bool satisfies(const Form& form, const scene::Object& obj,
               const scene::Schema& schema) {
  switch (form.kind()) {
    case Kind::kAtom: {
      const int attr = schema.attribute_index(form.attribute());
      const int value = schema.value_index(attr, form.value());
      return obj.values[attr] == value;
    }
    case Kind::kNot:
      return !satisfies(form.child(), obj, schema);
    case Kind::kAnd:
      return satisfies(form.left(), obj, schema) &&
             satisfies(form.right(), obj, schema);
    case Kind::kOr:
      return satisfies(form.left(), obj, schema) ||
             satisfies(form.right(), obj, schema);
  }
  return false;
}

Mask evaluate(const Form& form, const scene::World& world,
              const scene::Schema& schema) {
  Mask mask(world.objects.size());
  for (std::size_t i = 0; i < world.objects.size(); ++i) {
    scene::validate(world.objects[i], schema);
    mask[i] = satisfies(form, world.objects[i], schema);
  }
  return mask;
}

ObjectPredicate predicate(const Form& form, const scene::Schema& schema) {
  ObjectPredicate table(schema.universe_size());
  for (std::int64_t i = 0; i < schema.universe_size(); ++i) {
    table[i] = satisfies(form, scene::universe_object(schema, i), schema);
  }
  return table;
}

bool equivalent(const Form& a, const Form& b, const scene::Schema& schema) {
  return predicate(a, schema) == predicate(b, schema);
}

// ---------------------------------------------------------------------------
// Sampling and selection
// ---------------------------------------------------------------------------

namespace {

Form sample_with_budget(Rng& rng, const scene::Schema& schema,
                        const FormSamplerConfig& config, int budget) {
  if (budget >= 2 && rng.coin(config.negation_prob)) {
    return Form::negation(sample_with_budget(rng, schema, config, budget - 1));
  }
  if (budget >= 3 && rng.coin(config.binary_prob)) {
    const int left_budget = static_cast<int>(rng.uniform_int(1, budget - 2));
    Form left = sample_with_budget(rng, schema, config, left_budget);
    Form right = sample_with_budget(rng, schema, config, budget - 1 - left_budget);
    return rng.coin(0.5) ? Form::conjunction(std::move(left), std::move(right))
                         : Form::disjunction(std::move(left), std::move(right));
  }
  const int attr = static_cast<int>(rng.bounded(schema.attribute_count()));
  const int value =
      static_cast<int>(rng.bounded(schema.attribute(attr).values.size()));
  return Form::atom(schema.attribute(attr).name,
                    schema.attribute(attr).values[value]);
}

}  // namespace

Form sample_form(Rng& rng, const scene::Schema& schema,
                 const FormSamplerConfig& config) {
  if (config.max_size < 1) {
    throw ArgumentError("form sampler max_size must be >= 1");
  }
  if (config.negation_prob < 0 || config.negation_prob > 1 ||
      config.binary_prob < 0 || config.binary_prob > 1) {
    throw ArgumentError("form sampler probabilities must be in [0, 1]");
  }
  return sample_with_budget(rng, schema, config, config.max_size);
}

Form sample_form(std::uint64_t rng_seed, const scene::Schema& schema,
                 const FormSamplerConfig& config) {
  Rng rng(rng_seed);
  return sample_form(rng, schema, config);
}

Form most_frequent_form(const std::vector<Form>& forms,
                        const scene::Schema& schema) {
  if (forms.empty()) {
    throw ArgumentError("most_frequent_form requires a non-empty list");
  }
  // Group by semantic equivalence class; the class key is its predicate.
  struct Class {
    int count = 0;
    std::string representative;  // lexicographically least canonical print
  };
  std::map<ObjectPredicate, Class> classes;
  for (const Form& form : forms) {
    Class& cls = classes[predicate(form, schema)];
    std::string text = print(form);
    if (cls.count == 0 || text < cls.representative) {
      cls.representative = std::move(text);
    }
    ++cls.count;
  }
  const Class* best = nullptr;
  for (const auto& [pred, cls] : classes) {
    if (best == nullptr || cls.count > best->count ||
        (cls.count == best->count && cls.representative < best->representative)) {
      best = &cls;
    }
  }
  return parse(best->representative, schema);
}

}  // namespace refsem::logic
