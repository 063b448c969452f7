#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dqa {

/// Tabular tool output before it is rendered for the model.
struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const ResultSet&) const = default;
};

/// Pipe table: header, separator, one line per row. No rows gives the
/// header and separator only.
std::string to_markdown(const ResultSet& rs);

struct Column {
  std::string name;
  std::string type;
  std::string constraints;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of the column named `name` (case-insensitive), or npos.
  std::size_t column_index(std::string_view name) const;
};

struct IndexInfo {
  std::string name;
  std::string table;
  std::vector<std::string> columns;
};

struct SlowQuery {
  std::string sql;
  double mean_ms = 0.0;
  std::uint64_t calls = 0;
};

/// Fixture standing in for a live database instance. Tool executors read
/// from it and never modify it.
struct SimulatedInstance {
  std::string name;
  std::vector<Table> tables;
  std::vector<IndexInfo> indexes;
  std::vector<std::string> views;
  std::map<std::string, std::string> knobs;
  std::map<std::string, std::string> resources;
  std::vector<SlowQuery> slow_queries;
  std::vector<std::string> log_lines;

  const Table* find_table(std::string_view name) const;

  static SimulatedInstance from_json(const nlohmann::json& j);
  static SimulatedInstance load(const std::string& path);
  /// Small order-processing instance used when no fixture is supplied.
  static SimulatedInstance demo();
};

/// Evaluates a read-only SELECT against the fixture. Supported: column lists,
/// '*', COUNT/SUM/AVG/MIN/MAX, WHERE with AND-ed comparisons and LIKE,
/// GROUP BY one column, ORDER BY, LIMIT. Throws ParseError or LookupError.
ResultSet execute_select(const SimulatedInstance& instance, std::string_view sql);

std::string format_number(double v);

}  // namespace dqa
