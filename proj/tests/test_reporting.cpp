#include <doctest.h>

#include "fk/csvio.hpp"
#include "fk/errors.hpp"
#include "fk/gridspec.hpp"
#include "fk/svg.hpp"
#include "fk/targeting.hpp"

using namespace fk;

TEST_SUITE("reporting") {

TEST_CASE("double formatting round-trips and is bytewise stable") {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 2.302585092994046, 1e-12}) {
    const std::string s = format_double(v);
    CHECK(parse_double(s) == v);
    CHECK(format_double(v) == s);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("abc"), InvalidArgument);
  CHECK_THROWS_AS(parse_double("1.5x"), InvalidArgument);
}

TEST_CASE("csv line splitting") {
  CHECK(split_csv_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_csv_line("a") == std::vector<std::string>{"a"});
  CHECK(split_csv_line("a,,c") == std::vector<std::string>{"a", "", "c"});
  CHECK(split_lines("x\ny\n") == std::vector<std::string>{"x", "y"});
}

TEST_CASE("linear and log grids") {
  const auto lin = parse_eps_grid("lin:0:0.3:7");
  CHECK(lin.size() == 7);
  CHECK(lin.front() == 0.0);
  CHECK(lin.back() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(lin[1] == doctest::Approx(0.05).epsilon(1e-12));

  const auto lg = parse_eps_grid("log:0.01:0.5:8");
  CHECK(lg.size() == 8);
  CHECK(lg.front() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(lg.back() == doctest::Approx(0.5).epsilon(1e-12));
  for (std::size_t i = 1; i < lg.size(); ++i) {
    CHECK(lg[i] / lg[i - 1] ==
          doctest::Approx(lg[1] / lg[0]).epsilon(1e-9));
  }

  CHECK(parse_eps_grid("0,0.05,0.1") ==
        std::vector<double>{0.0, 0.05, 0.1});
  CHECK(parse_eps_grid("lin:0.2:0.2:1") == std::vector<double>{0.2});
  CHECK_THROWS_AS(parse_eps_grid("log:0:1:5"), InvalidArgument);
  CHECK_THROWS_AS(parse_eps_grid("lin:0:1"), InvalidArgument);
  CHECK_THROWS_AS(parse_eps_grid("-0.1,0.2"), InvalidArgument);
  CHECK_THROWS_AS(parse_eps_grid(""), InvalidArgument);
}

TEST_CASE("index lists") {
  CHECK(parse_index_list("1,3,5") == std::vector<std::size_t>{1, 3, 5});
  CHECK_THROWS_AS(parse_index_list("1,2.5"), InvalidArgument);
  CHECK_THROWS_AS(parse_index_list("-2"), InvalidArgument);
}

TEST_CASE("targeting csv layout") {
  TargetingReport t;
  t.rows = {{0.0, 0, 10, 0.0}, {0.5, 5, 10, 50.0}};
  const std::string csv = targeting_to_csv(t);
  const auto lines = split_lines(csv);
  CHECK(lines.size() == 3);
  CHECK(lines[0] == "epsilon,s_count,total,percent_attacking_s");
  CHECK(lines[1] == "0,0,10,0");
  CHECK(lines[2] == "0.5,5,10,50");
}

TEST_CASE("svg output is self-contained and deterministic") {
  PlotSeries s{"series a", {0, 1, 2}, {0.5, 0.7, 0.2}, true, Marker::dot};
  PlotSeries t{"series b", {0, 1, 2}, {0.1, 0.3, 0.9}, true, Marker::star};
  const std::string svg =
      render_plot_svg("demo", "x", "y", {s, t}, {{0.5, "mean"}});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("series a") != std::string::npos);
  CHECK(svg.find("mean") != std::string::npos);
  CHECK(svg.find("href") == std::string::npos);  // no external assets
  CHECK(render_plot_svg("demo", "x", "y", {s, t}, {{0.5, "mean"}}) == svg);
}

}  // TEST_SUITE
