#include <doctest.h>

#include "vdlab/config.hpp"
#include "vdlab/errors.hpp"
#include "vdlab/rng.hpp"
#include "vdlab/util.hpp"

using namespace vdlab;

TEST_CASE("strfmt formats like printf") {
  CHECK(strfmt("%d/%s/%.2f", 3, "x", 1.5) == "3/x/1.50");
}

TEST_CASE("trim and split") {
  CHECK(trim("  a b \t") == "a b");
  CHECK(split("a,b,,c", ',').size() == 4);
  CHECK(split("a,b,,c", ',')[2] == "");
}

TEST_CASE("config parses sections and key=value lines") {
  const Config c = Config::parse_string(
      "top = 1\n"
      "[dsp]\n"
      "# comment\n"
      "sample_rate = 22050\n"
      "hop = 315\n"
      "[fe]\n"
      "context = delta\n");
  CHECK(c.get_int("top", 0) == 1);
  CHECK(c.get_int("dsp.sample_rate", 0) == 22050);
  CHECK(c.get_string("fe.context", "") == "delta");
  CHECK(c.get_int("missing", 7) == 7);
}

TEST_CASE("config rejects malformed lines") {
  CHECK_THROWS_AS(Config::parse_string("novalue\n"), ParseError);
  CHECK_THROWS_AS(Config::parse_string("[unterminated\n"), ParseError);
  const Config c = Config::parse_string("x = abc\n");
  CHECK_THROWS_AS(c.get_double("x", 0.0), ValueError);
}

TEST_CASE("config merge and overrides") {
  Config base = Config::parse_string("[a]\nx = 1\ny = 2\n");
  Config over;
  over.set_from_assignment("a.x=10");
  base.merge(over);
  CHECK(base.get_int("a.x", 0) == 10);
  CHECK(base.get_int("a.y", 0) == 2);
}

TEST_CASE("config hash is stable and order independent") {
  const Config a = Config::parse_string("[s]\nx = 1\ny = 2\n");
  const Config b = Config::parse_string("[s]\ny = 2\nx = 1\n");
  CHECK(a.hash() == b.hash());
  Config c = a;
  c.set("s.x", "3");
  CHECK(a.hash() != c.hash());
}

TEST_CASE("config double lists") {
  const Config c = Config::parse_string("levels = -12, -6, 0, 6, 12\n");
  const auto v = c.get_double_list("levels", {});
  REQUIRE(v.size() == 5);
  CHECK(v[0] == -12.0);
  CHECK(v[4] == 12.0);
}

TEST_CASE("rng streams are deterministic and independent of call site") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());
  Rng s1 = Rng::derive(7, 1);
  Rng s2 = Rng::derive(7, 2);
  CHECK(s1.bits() != s2.bits());
}

TEST_CASE("rng uniform stays in range") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
