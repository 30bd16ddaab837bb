#include <doctest.h>

#include <string>

#include "odtr/csv.hpp"
#include "odtr/errors.hpp"
#include "odtr/simlab.hpp"

using namespace odtr;

TEST_CASE("well-formed file parses") {
  const std::string text =
      "x1_age,x1_sev,a1,x2_resp,a2,y2\n"
      "0.5,1.2,1,-0.3,1,3\n"
      "-0.1,0.0,-1,0.7,-1,1\n"
      "1.5,-2.2,1,0.0,1,2\n";
  const IngestReport rep = parse_dataset_csv(text);
  CHECK(rep.data.size() == 3);
  CHECK(rep.data.n_categories == 3);
  CHECK(rep.data.x1_names == std::vector<std::string>{"age", "sev"});
  CHECK(rep.data.x2_names == std::vector<std::string>{"resp"});
  CHECK_FALSE(rep.relabeled);
  CHECK(rep.data.trajectories[1].a1 == -1);
  CHECK(rep.data.trajectories[0].y2 == 3);
}

TEST_CASE("zero treatment is rejected with the row index") {
  const std::string text =
      "x1_v,a1,x2_w,a2,y2\n"
      "0.5,1,0.1,1,2\n"
      "0.2,1,0.3,0,1\n";
  try {
    parse_dataset_csv(text);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("+1 or -1") != std::string::npos);
  }
}

TEST_CASE("labels are remapped to 1..K and the mapping recorded") {
  const std::string text =
      "x1_v,a1,x2_w,a2,y2\n"
      "0.5,1,0.1,1,0\n"
      "0.2,-1,0.3,1,2\n"
      "0.1,1,0.4,-1,1\n";
  const IngestReport rep = parse_dataset_csv(text);
  CHECK(rep.relabeled);
  CHECK(rep.label_map == std::vector<int>{0, 1, 2});
  CHECK(rep.data.trajectories[0].y2 == 1);
  CHECK(rep.data.trajectories[1].y2 == 3);
  CHECK(rep.data.trajectories[2].y2 == 2);
}

TEST_CASE("schema violations are diagnosed") {
  CHECK_THROWS_AS(parse_dataset_csv(""), DataError);
  CHECK_THROWS_AS(parse_dataset_csv("a1,x2_w,a2,y2\n"), DataError);  // no x1 block
  CHECK_THROWS_AS(parse_dataset_csv("x1_v,x2_w,a2,y2\n"), DataError);  // missing a1
  CHECK_THROWS_AS(parse_dataset_csv("x1_v,a1,a2,y2\n"), DataError);  // missing x2 block
  CHECK_THROWS_AS(parse_dataset_csv("x1_v,a1,x2_w,a2,y2\n"), DataError);  // no rows
  CHECK_THROWS_AS(parse_dataset_csv("x1_v,a1,x2_w,a2,y2\n1,1,1,1\n"), DataError);  // short row
  CHECK_THROWS_AS(parse_dataset_csv("x1_v,a1,x2_w,a2,y2\nzz,1,1,1,2\n"), DataError);
  CHECK_THROWS_AS(parse_dataset_csv("x1_v,a1,x2_w,a2,y2\n1,1,1,1,2.5\n"), DataError);
  // single observed category
  CHECK_THROWS_AS(parse_dataset_csv("x1_v,a1,x2_w,a2,y2\n1,1,1,1,2\n0,-1,0,1,2\n"), DataError);
}

TEST_CASE("generated datasets round-trip through the CSV schema") {
  SeededRng rng(81, 0);
  const TwoStageDataset data = generate(ScenarioSpec::get(6), 50, rng);
  const IngestReport rep = parse_dataset_csv(dataset_to_csv(data));
  REQUIRE(rep.data.size() == data.size());
  CHECK(rep.data.n_categories == data.n_categories);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(rep.data.trajectories[i].x1 == data.trajectories[i].x1);
    CHECK(rep.data.trajectories[i].x2 == data.trajectories[i].x2);
    CHECK(rep.data.trajectories[i].a1 == data.trajectories[i].a1);
    CHECK(rep.data.trajectories[i].a2 == data.trajectories[i].a2);
    CHECK(rep.data.trajectories[i].y2 == data.trajectories[i].y2);
  }
}

TEST_CASE("missing file raises DataError") {
  CHECK_THROWS_AS((void)load_dataset_csv("/nonexistent/file.csv"), DataError);
}
