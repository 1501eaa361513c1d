#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "refsem/logic.hpp"
#include "refsem/scene.hpp"

using namespace refsem;
using logic::Form;
using logic::Kind;
using scene::Object;
using scene::Schema;
using scene::World;

namespace {

Schema tiny_schema() {
  return Schema({{"color", {"red", "blue"}}, {"shape", {"square", "circle", "star"}}});
}

// Independent reference evaluator: resolves names by string comparison on
// every call, no index caching, no shared code with logic::satisfies.
bool oracle_satisfies(const Form& e, const Object& obj, const Schema& schema) {
  switch (e.kind()) {
    case Kind::kAtom: {
      for (int a = 0; a < schema.attribute_count(); ++a) {
        const auto& attr = schema.attribute(a);
        if (attr.name != e.attribute()) continue;
        return attr.values[obj.values[a]] == e.value();
      }
      return false;
    }
    case Kind::kNot:
      return !oracle_satisfies(e.child(), obj, schema);
    case Kind::kAnd:
      return oracle_satisfies(e.left(), obj, schema) &&
             oracle_satisfies(e.right(), obj, schema);
    case Kind::kOr:
      return oracle_satisfies(e.left(), obj, schema) ||
             oracle_satisfies(e.right(), obj, schema);
  }
  return false;
}

std::vector<Form> all_atoms(const Schema& schema) {
  std::vector<Form> atoms;
  for (const auto& attr : schema.attributes())
    for (const auto& value : attr.values) atoms.push_back(Form::atom(attr.name, value));
  return atoms;
}

// Every form of exactly `size` nodes, built bottom-up.
const std::vector<Form>& forms_of_size(int size, const Schema& schema) {
  static std::vector<std::vector<Form>> cache;  // cache[s-1]
  if (static_cast<int>(cache.size()) >= size) return cache[size - 1];
  for (int s = static_cast<int>(cache.size()) + 1; s <= size; ++s) {
    std::vector<Form> out;
    if (s == 1) {
      out = all_atoms(schema);
    } else {
      for (const Form& f : cache[s - 2]) out.push_back(Form::negation(f));
      for (int ls = 1; ls <= s - 2; ++ls) {
        const int rs = s - 1 - ls;
        for (const Form& l : cache[ls - 1])
          for (const Form& r : cache[rs - 1]) {
            out.push_back(Form::conjunction(l, r));
            out.push_back(Form::disjunction(l, r));
          }
      }
    }
    cache.push_back(std::move(out));
  }
  return cache[size - 1];
}

// All worlds of exactly `n` objects over the schema universe, by counting.
std::vector<World> all_worlds(int n, const Schema& schema) {
  const auto u = schema.universe_size();
  std::int64_t total = 1;
  for (int i = 0; i < n; ++i) total *= u;
  std::vector<World> worlds;
  worlds.reserve(total);
  for (std::int64_t code = 0; code < total; ++code) {
    World w;
    std::int64_t c = code;
    for (int i = 0; i < n; ++i) {
      w.objects.push_back(scene::universe_object(schema, c % u));
      c /= u;
    }
    worlds.push_back(std::move(w));
  }
  return worlds;
}

Form parse_std(const std::string& text) { return logic::parse(text, Schema::standard()); }

}  // namespace

TEST_CASE("form construction and accessors") {
  const Form a = Form::atom("color", "green");
  CHECK(a.kind() == Kind::kAtom);
  CHECK(a.size() == 1);
  CHECK(a.attribute() == "color");
  CHECK(a.value() == "green");
  CHECK_THROWS_AS(a.child(), ArgumentError);
  CHECK_THROWS_AS(a.left(), ArgumentError);

  const Form n = Form::negation(a);
  CHECK(n.kind() == Kind::kNot);
  CHECK(n.size() == 2);
  CHECK(n.child() == a);
  CHECK_THROWS_AS(n.attribute(), ArgumentError);

  const Form c = Form::conjunction(a, n);
  CHECK(c.kind() == Kind::kAnd);
  CHECK(c.size() == 4);
  CHECK(c.left() == a);
  CHECK(c.right() == n);
  CHECK_THROWS_AS(c.child(), ArgumentError);

  const Form d = Form::disjunction(n, a);
  CHECK(d.kind() == Kind::kOr);
  CHECK(d.size() == 4);
  CHECK(c != d);
  CHECK(c == Form::conjunction(Form::atom("color", "green"), Form::negation(a)));
}

TEST_CASE("print produces canonical text") {
  const Form green = Form::atom("color", "green");
  CHECK(logic::print(green) == "(color green)");
  CHECK(logic::print(Form::negation(Form::atom("shape", "arch"))) ==
        "(not (shape arch))");
  CHECK(logic::print(Form::conjunction(green,
                                       Form::negation(Form::atom("shape", "triangle")))) ==
        "(and (color green) (not (shape triangle)))");
  CHECK(logic::print(Form::disjunction(green, green)) ==
        "(or (color green) (color green))");
}

TEST_CASE("print is injective on small forms") {
  const Schema s = tiny_schema();
  std::set<std::string> texts;
  int total = 0;
  for (int size = 1; size <= 4; ++size) {
    for (const Form& f : forms_of_size(size, s)) {
      texts.insert(logic::print(f));
      ++total;
    }
  }
  CHECK(static_cast<int>(texts.size()) == total);
}

TEST_CASE("parse handles the grammar") {
  const Form f = parse_std("(and (color green) (not (shape triangle)))");
  CHECK(f.kind() == Kind::kAnd);
  CHECK(f.left() == Form::atom("color", "green"));
  CHECK(f.right() == Form::negation(Form::atom("shape", "triangle")));
  CHECK(parse_std("(or (shape ring) (shape cube))").kind() == Kind::kOr);
  CHECK(parse_std("(not (color tan))") == Form::negation(Form::atom("color", "tan")));
  // surrounding whitespace is tolerated
  CHECK(parse_std("  (color green)  ") == Form::atom("color", "green"));
}

TEST_CASE("parse rejects malformed text with byte offsets") {
  auto offset_of = [](const std::string& text) -> std::size_t {
    try {
      parse_std(text);
    } catch (const ParseError& e) {
      return e.offset();
    }
    FAIL("expected ParseError for: ", text);
    return 0;
  };

  CHECK_THROWS_AS(parse_std("(color green"), ParseError);        // unbalanced
  CHECK_THROWS_AS(parse_std("(xor (color green) (color tan))"), ParseError);
  CHECK_THROWS_AS(parse_std("(size big)"), ParseError);          // unknown attribute
  CHECK_THROWS_AS(parse_std("(color pink)"), ParseError);        // unknown value
  CHECK_THROWS_AS(parse_std("(color green) extra"), ParseError); // trailing tokens
  CHECK_THROWS_AS(parse_std(""), ParseError);
  CHECK_THROWS_AS(parse_std("(not (color green) (color tan))"), ParseError);
  CHECK_THROWS_AS(parse_std("(and (color green))"), ParseError);

  CHECK(offset_of("(color pink)") == 7);        // points at the value token
  CHECK(offset_of("(color green) t") == 14);    // points at the trailing token
  CHECK(offset_of("(size big)") == 1);          // points at the attribute token
}

TEST_CASE("parse(print(e)) is the identity on random forms") {
  const Schema s = Schema::standard();
  logic::FormSamplerConfig cfg;
  cfg.max_size = 9;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Form e = logic::sample_form(seed, s, cfg);
    const Form back = logic::parse(logic::print(e), s);
    CHECK(back == e);
    CHECK(logic::print(back) == logic::print(e));
  }
}

TEST_CASE("evaluate on a two-object world") {
  const Schema s = Schema::standard();
  World w;
  w.objects.push_back(Object{{0, 0}});  // green triangle
  w.objects.push_back(Object{{1, 1}});  // tan arch

  CHECK(logic::evaluate(parse_std("(color green)"), w, s) == logic::Mask{true, false});
  CHECK(logic::evaluate(parse_std("(not (color green))"), w, s) ==
        logic::Mask{false, true});
  CHECK(logic::evaluate(parse_std("(or (shape triangle) (shape arch))"), w, s) ==
        logic::Mask{true, true});
  CHECK(logic::evaluate(parse_std("(and (color green) (shape arch))"), w, s) ==
        logic::Mask{false, false});
}

TEST_CASE("evaluate acts per object") {
  const Schema s = Schema::standard();
  logic::FormSamplerConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const World w = scene::generate_world(seed, s, 2, 8);
    const Form e = logic::sample_form(seed ^ 0xabcdULL, s, cfg);
    const logic::Mask mask = logic::evaluate(e, w, s);
    REQUIRE(mask.size() == w.objects.size());

    World reversed = w;
    std::reverse(reversed.objects.begin(), reversed.objects.end());
    logic::Mask expected = mask;
    std::reverse(expected.begin(), expected.end());
    CHECK(logic::evaluate(e, reversed, s) == expected);

    for (size_t i = 0; i < w.objects.size(); ++i)
      CHECK(mask[i] == logic::satisfies(e, w.objects[i], s));
  }
}

TEST_CASE("boolean connectives act elementwise") {
  const Schema s = Schema::standard();
  logic::FormSamplerConfig cfg;
  cfg.max_size = 5;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const World w = scene::generate_world(seed, s, 1, 6);
    const Form a = logic::sample_form(seed * 2 + 1, s, cfg);
    const Form b = logic::sample_form(seed * 2 + 2, s, cfg);
    const logic::Mask ma = logic::evaluate(a, w, s);
    const logic::Mask mb = logic::evaluate(b, w, s);
    const logic::Mask mnot = logic::evaluate(Form::negation(a), w, s);
    const logic::Mask mand = logic::evaluate(Form::conjunction(a, b), w, s);
    const logic::Mask mor = logic::evaluate(Form::disjunction(a, b), w, s);
    for (size_t i = 0; i < ma.size(); ++i) {
      CHECK(mnot[i] == !ma[i]);
      CHECK(mand[i] == (ma[i] && mb[i]));
      CHECK(mor[i] == (ma[i] || mb[i]));
    }
  }
}

TEST_CASE("predicate covers the universe") {
  const Schema s = Schema::standard();
  const Form green = parse_std("(color green)");
  const logic::ObjectPredicate p = logic::predicate(green, s);
  REQUIRE(static_cast<std::int64_t>(p.size()) == s.universe_size());
  int count = 0;
  for (bool b : p) count += b;
  CHECK(count == 5);  // one per shape

  const logic::ObjectPredicate taut =
      logic::predicate(Form::disjunction(green, Form::negation(green)), s);
  CHECK(std::all_of(taut.begin(), taut.end(), [](bool b) { return b; }));
  const logic::ObjectPredicate contra =
      logic::predicate(Form::conjunction(green, Form::negation(green)), s);
  CHECK(std::none_of(contra.begin(), contra.end(), [](bool b) { return b; }));
}

TEST_CASE("equivalent implements exact laws") {
  const Schema s = Schema::standard();
  const Form a = parse_std("(color green)");
  const Form b = parse_std("(shape cube)");
  CHECK(logic::equivalent(a, Form::negation(Form::negation(a)), s));
  CHECK(logic::equivalent(Form::conjunction(a, b), Form::conjunction(b, a), s));
  CHECK(logic::equivalent(Form::negation(Form::conjunction(a, b)),
                          Form::disjunction(Form::negation(a), Form::negation(b)), s));
  CHECK(logic::equivalent(Form::negation(Form::disjunction(a, b)),
                          Form::conjunction(Form::negation(a), Form::negation(b)), s));
  CHECK_FALSE(logic::equivalent(a, b, s));
  CHECK_FALSE(logic::equivalent(a, Form::negation(a), s));
}

TEST_CASE("equivalent is an equivalence relation on samples") {
  const Schema s = tiny_schema();
  logic::FormSamplerConfig cfg;
  cfg.max_size = 5;
  std::vector<Form> forms;
  for (std::uint64_t seed = 0; seed < 24; ++seed)
    forms.push_back(logic::sample_form(seed, s, cfg));
  for (const Form& x : forms) CHECK(logic::equivalent(x, x, s));
  for (const Form& x : forms)
    for (const Form& y : forms) {
      const bool xy = logic::equivalent(x, y, s);
      CHECK(xy == logic::equivalent(y, x, s));
      if (!xy) continue;
      for (const Form& z : forms)
        if (logic::equivalent(y, z, s)) CHECK(logic::equivalent(x, z, s));
    }
}

TEST_CASE("equivalence implies equal denotations everywhere") {
  const Schema s = tiny_schema();
  logic::FormSamplerConfig cfg;
  cfg.max_size = 5;
  std::vector<Form> forms;
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    forms.push_back(logic::sample_form(seed, s, cfg));
  std::vector<World> worlds;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    worlds.push_back(scene::generate_world(seed, s, 1, 6));
  for (size_t i = 0; i < forms.size(); ++i)
    for (size_t j = i + 1; j < forms.size(); ++j) {
      if (!logic::equivalent(forms[i], forms[j], s)) continue;
      for (const World& w : worlds)
        CHECK(logic::evaluate(forms[i], w, s) == logic::evaluate(forms[j], w, s));
    }
}

// Exhaustive: every form of size <= 5 over a 2-attribute schema (6-point
// universe) against the independent string-matching evaluator, on every
// world of <= 3 objects. Zero tolerance.
TEST_CASE("evaluator matches the brute-force oracle exhaustively") {
  const Schema s = tiny_schema();
  REQUIRE(s.universe_size() == 6);

  std::vector<Form> forms;
  for (int size = 1; size <= 5; ++size)
    for (const Form& f : forms_of_size(size, s)) forms.push_back(f);
  CHECK(forms.size() == 1525);  // 5 + 5 + 55 + 155 + 1305

  std::vector<World> worlds;
  for (int n = 1; n <= 3; ++n)
    for (World& w : all_worlds(n, s)) worlds.push_back(std::move(w));
  CHECK(worlds.size() == 258);  // 6 + 36 + 216

  std::int64_t mismatches = 0;
  for (const Form& e : forms) {
    for (const World& w : worlds) {
      const logic::Mask got = logic::evaluate(e, w, s);
      for (int i = 0; i < w.size(); ++i)
        mismatches += got[i] != oracle_satisfies(e, w.objects[i], s);
    }
    // predicate() must agree with the oracle on every universe point
    const logic::ObjectPredicate p = logic::predicate(e, s);
    for (std::int64_t u = 0; u < s.universe_size(); ++u)
      mismatches += p[u] != oracle_satisfies(e, scene::universe_object(s, u), s);
  }
  CHECK(mismatches == 0);
}

TEST_CASE("sample_form respects the size budget and probabilities") {
  const Schema s = Schema::standard();

  SUBCASE("max_size 1 always yields an atom") {
    logic::FormSamplerConfig cfg;
    cfg.max_size = 1;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
      CHECK(logic::sample_form(seed, s, cfg).kind() == Kind::kAtom);
  }

  SUBCASE("negation_prob 1 with budget 2 yields a negated atom") {
    logic::FormSamplerConfig cfg;
    cfg.max_size = 2;
    cfg.negation_prob = 1.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Form f = logic::sample_form(seed, s, cfg);
      REQUIRE(f.kind() == Kind::kNot);
      CHECK(f.child().kind() == Kind::kAtom);
    }
  }

  SUBCASE("size never exceeds the budget") {
    logic::FormSamplerConfig cfg;
    cfg.max_size = 7;
    std::set<int> sizes;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      const int size = logic::sample_form(seed, s, cfg).size();
      CHECK(size >= 1);
      CHECK(size <= 7);
      sizes.insert(size);
    }
    CHECK(sizes.size() > 3);  // the sampler actually uses its range
  }

  SUBCASE("deterministic per seed") {
    logic::FormSamplerConfig cfg;
    CHECK(logic::sample_form(99, s, cfg) == logic::sample_form(99, s, cfg));
  }
}

TEST_CASE("most_frequent_form counts equivalence classes") {
  const Schema s = Schema::standard();
  const Form green = parse_std("(color green)");
  const Form arch = parse_std("(shape arch)");

  SUBCASE("plain majority") {
    CHECK(logic::most_frequent_form({green, green, arch}, s) == green);
    CHECK(logic::most_frequent_form({arch, green, arch}, s) == arch);
  }

  SUBCASE("ties break to the lexicographically least canonical print") {
    CHECK(logic::most_frequent_form({green, arch}, s) == green);
    CHECK(logic::most_frequent_form({arch, green}, s) == green);
  }

  SUBCASE("paraphrases count toward one class") {
    const Form green2 = Form::negation(Form::negation(green));
    // class {green, not not green} has 2 members vs 1 arch
    const Form winner = logic::most_frequent_form({green2, arch, green}, s);
    CHECK(logic::equivalent(winner, green, s));
    // the class representative is its least print, not the first spelling seen
    CHECK(logic::print(winner) == "(color green)");
  }

  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(logic::most_frequent_form({}, s), ArgumentError);
  }
}
