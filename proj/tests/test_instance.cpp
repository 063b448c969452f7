#include <gtest/gtest.h>

#include "dqa/error.hpp"
#include "dqa/instance.hpp"
#include "test_util.hpp"

namespace dqa {
namespace {

const SimulatedInstance& demo() {
  static const SimulatedInstance inst = SimulatedInstance::demo();
  return inst;
}

TEST(Select, CountRows) {
  auto rs = execute_select(demo(), "SELECT COUNT(*) FROM orders");
  ASSERT_EQ(rs.rows.size(), 1u);
  EXPECT_EQ(rs.rows[0][0], "5");
}

TEST(Select, StarWithWhere) {
  auto rs = execute_select(demo(), "SELECT * FROM orders WHERE status = 'pending'");
  EXPECT_EQ(rs.columns, (std::vector<std::string>{"id", "customer_id", "amount", "status"}));
  ASSERT_EQ(rs.rows.size(), 2u);
  EXPECT_EQ(rs.rows[0][0], "2");
  EXPECT_EQ(rs.rows[1][0], "5");
}

TEST(Select, NumericComparisonAndAnd) {
  auto rs = execute_select(demo(), "select id from orders where amount > 100 and customer_id = 1");
  ASSERT_EQ(rs.rows.size(), 2u);
  EXPECT_EQ(rs.rows[0][0], "1");
  EXPECT_EQ(rs.rows[1][0], "3");
}

TEST(Select, GroupBySum) {
  auto rs = execute_select(demo(), "SELECT customer_id, SUM(amount) FROM orders GROUP BY customer_id");
  ASSERT_EQ(rs.rows.size(), 3u);
  EXPECT_EQ(rs.rows[0], (std::vector<std::string>{"1", "430.5"}));
  EXPECT_EQ(rs.rows[1], (std::vector<std::string>{"2", "174.99"}));
  EXPECT_EQ(rs.rows[2], (std::vector<std::string>{"3", "42.25"}));
}

TEST(Select, OrderByDescLimit) {
  auto rs = execute_select(demo(), "SELECT id, amount FROM orders ORDER BY amount DESC LIMIT 2");
  ASSERT_EQ(rs.rows.size(), 2u);
  EXPECT_EQ(rs.rows[0][0], "3");
  EXPECT_EQ(rs.rows[1][0], "1");
}

TEST(Select, LikePattern) {
  auto rs = execute_select(demo(), "SELECT name FROM customers WHERE name LIKE 'A%'");
  ASSERT_EQ(rs.rows.size(), 1u);
  EXPECT_EQ(rs.rows[0][0], "Alice");
}

TEST(Select, Errors) {
  EXPECT_THROW(execute_select(demo(), "SELECT * FROM nowhere"), LookupError);
  EXPECT_THROW(execute_select(demo(), "SELECT nope FROM orders"), LookupError);
  EXPECT_THROW(execute_select(demo(), "DELETE FROM orders"), ParseError);
  EXPECT_THROW(execute_select(demo(), "SELECT FROM"), ParseError);
}

TEST(Markdown, TableAndEmpty) {
  ResultSet rs{{"a", "b"}, {{"1", "2"}, {"3", "4"}}};
  EXPECT_EQ(to_markdown(rs), "| a | b |\n| --- | --- |\n| 1 | 2 |\n| 3 | 4 |");
  ResultSet empty{{"a"}, {}};
  EXPECT_EQ(to_markdown(empty), "| a |\n| --- |");
}

TEST(FormatNumber, IntegersAndFractions) {
  EXPECT_EQ(format_number(5.0), "5");
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333");
}

TEST(Fixture, JsonRoundTripSubset) {
  auto j = nlohmann::json::parse(R"({
    "name": "tiny",
    "tables": [{"name": "t", "columns": [{"name": "x", "type": "int"}], "rows": [["1"], ["2"]]}],
    "knobs": {"work_mem": "8MB"}
  })");
  auto inst = SimulatedInstance::from_json(j);
  EXPECT_EQ(inst.name, "tiny");
  ASSERT_NE(inst.find_table("T"), nullptr);
  EXPECT_EQ(execute_select(inst, "SELECT MAX(x) FROM t").rows[0][0], "2");
  EXPECT_THROW(SimulatedInstance::from_json(nlohmann::json::parse(R"({"tables":[{"columns":[]}]})")),
               ParseError);
}

}  // namespace
}  // namespace dqa
