#include "dqa/instance.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>

#include "dqa/error.hpp"
#include "dqa/text.hpp"

namespace dqa {

std::string to_markdown(const ResultSet& rs) {
  auto row_line = [](const std::vector<std::string>& cells) {
    std::string line = "|";
    for (const auto& c : cells) {
      std::string cell = c;
      std::replace(cell.begin(), cell.end(), '\n', ' ');
      line += " " + cell + " |";
    }
    return line;
  };
  std::string out = row_line(rs.columns);
  out += "\n|";
  for (std::size_t i = 0; i < rs.columns.size(); ++i) out += " --- |";
  for (const auto& row : rs.rows) {
    out += '\n';
    out += row_line(row);
  }
  return out;
}

std::size_t Table::column_index(std::string_view col) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (text::to_lower_ascii(columns[i].name) == text::to_lower_ascii(col)) return i;
  }
  return std::string::npos;
}

const Table* SimulatedInstance::find_table(std::string_view table) const {
  auto wanted = text::to_lower_ascii(text::trim(table));
  for (const auto& t : tables) {
    if (text::to_lower_ascii(t.name) == wanted) return &t;
  }
  return nullptr;
}

SimulatedInstance SimulatedInstance::from_json(const nlohmann::json& j) {
  SimulatedInstance inst;
  try {
    inst.name = j.value("name", std::string("instance"));
    for (const auto& t : j.value("tables", nlohmann::json::array())) {
      Table table;
      table.name = t.at("name").get<std::string>();
      for (const auto& c : t.at("columns")) {
        table.columns.push_back({c.at("name").get<std::string>(), c.value("type", std::string{}),
                                 c.value("constraints", std::string{})});
      }
      for (const auto& r : t.value("rows", nlohmann::json::array())) {
        std::vector<std::string> row;
        for (const auto& cell : r) {
          row.push_back(cell.is_string() ? cell.get<std::string>() : cell.dump());
        }
        if (row.size() != table.columns.size()) {
          throw ParseError("table '" + table.name + "' has a row of the wrong width");
        }
        table.rows.push_back(std::move(row));
      }
      inst.tables.push_back(std::move(table));
    }
    for (const auto& ix : j.value("indexes", nlohmann::json::array())) {
      inst.indexes.push_back({ix.at("name").get<std::string>(), ix.at("table").get<std::string>(),
                              ix.at("columns").get<std::vector<std::string>>()});
    }
    inst.views = j.value("views", std::vector<std::string>{});
    inst.knobs = j.value("knobs", std::map<std::string, std::string>{});
    inst.resources = j.value("resources", std::map<std::string, std::string>{});
    for (const auto& q : j.value("slow_queries", nlohmann::json::array())) {
      inst.slow_queries.push_back({q.at("sql").get<std::string>(), q.value("mean_ms", 0.0),
                                   q.value("calls", std::uint64_t{0})});
    }
    inst.log_lines = j.value("log_lines", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance fixture: ") + e.what());
  }
  return inst;
}

SimulatedInstance SimulatedInstance::load(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(text::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

SimulatedInstance SimulatedInstance::demo() {
  SimulatedInstance inst;
  inst.name = "demo-orders";
  inst.tables.push_back(
      {"orders",
       {{"id", "integer", "PRIMARY KEY"},
        {"customer_id", "integer", "NOT NULL REFERENCES customers(id)"},
        {"amount", "numeric(10,2)", "NOT NULL"},
        {"status", "varchar(16)", "NOT NULL"}},
       {{"1", "1", "120.50", "shipped"},
        {"2", "2", "75.00", "pending"},
        {"3", "1", "310.00", "shipped"},
        {"4", "3", "42.25", "cancelled"},
        {"5", "2", "99.99", "pending"}}});
  inst.tables.push_back({"customers",
                         {{"id", "integer", "PRIMARY KEY"},
                          {"name", "varchar(64)", "NOT NULL"},
                          {"region", "varchar(16)", ""}},
                         {{"1", "Alice", "east"}, {"2", "Bob", "west"}, {"3", "Chen", "east"}}});
  inst.indexes.push_back({"orders_pkey", "orders", {"id"}});
  inst.indexes.push_back({"customers_pkey", "customers", {"id"}});
  inst.views.push_back("pending_orders");
  inst.knobs = {{"shared_buffers", "128MB"},
                {"work_mem", "4MB"},
                {"max_connections", "100"},
                {"effective_cache_size", "4GB"}};
  inst.resources = {{"cpu_usage", "87%"},
                    {"memory_usage", "62%"},
                    {"disk_io_read", "120 MB/s"},
                    {"disk_io_write", "45 MB/s"}};
  inst.slow_queries.push_back({"SELECT * FROM orders WHERE customer_id = 2", 850.0, 1200});
  inst.slow_queries.push_back({"SELECT sum(amount) FROM orders WHERE status = 'shipped'", 430.0, 300});
  inst.log_lines = {"LOG: checkpoint complete", "ERROR: deadlock detected on relation orders",
                    "LOG: autovacuum launcher started"};
  return inst;
}

std::string format_number(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

namespace {

enum class Tok { ident, number, string, symbol, end };

struct Token {
  Tok kind;
  std::string text;
};

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < sql.size()) {
    char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t s = i;
      while (i < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_' ||
                                sql[i] == '.')) {
        ++i;
      }
      out.push_back({Tok::ident, std::string(sql.substr(s, i - s))});
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      std::size_t s = i++;
      while (i < sql.size() && (std::isdigit(static_cast<unsigned char>(sql[i])) || sql[i] == '.')) ++i;
      out.push_back({Tok::number, std::string(sql.substr(s, i - s))});
    } else if (c == '\'') {
      std::string v;
      ++i;
      for (;;) {
        if (i >= sql.size()) throw ParseError("unterminated string literal");
        if (sql[i] == '\'') {
          if (i + 1 < sql.size() && sql[i + 1] == '\'') {
            v += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        v += sql[i++];
      }
      out.push_back({Tok::string, std::move(v)});
    } else {
      static constexpr std::string_view kTwo[] = {"<=", ">=", "<>", "!="};
      bool matched = false;
      for (auto op : kTwo) {
        if (sql.substr(i, 2) == op) {
          out.push_back({Tok::symbol, std::string(op)});
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("*,();=<>").find(c) == std::string_view::npos) {
        throw ParseError(std::string("unexpected character '") + c + "' in SQL");
      }
      out.push_back({Tok::symbol, std::string(1, c)});
      ++i;
    }
  }
  out.push_back({Tok::end, ""});
  return out;
}

enum class Agg { none, count, sum, avg, min, max };

struct SelectItem {
  Agg agg = Agg::none;
  std::string column;  // "*" for COUNT(*)
  std::string label;
};

struct Condition {
  std::string column;
  std::string op;
  std::string value;
  bool value_is_number = false;
};

struct Query {
  bool star = false;
  std::vector<SelectItem> items;
  std::string table;
  std::vector<Condition> where;
  std::optional<std::string> group_by;
  std::optional<std::string> order_by;
  bool order_desc = false;
  std::optional<std::size_t> limit;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Query parse() {
    Query q;
    expect_kw("SELECT");
    if (peek_sym("*")) {
      next();
      q.star = true;
    } else {
      q.items.push_back(item());
      while (peek_sym(",")) {
        next();
        q.items.push_back(item());
      }
    }
    expect_kw("FROM");
    q.table = ident();
    if (peek_kw("WHERE")) {
      next();
      q.where.push_back(condition());
      while (peek_kw("AND")) {
        next();
        q.where.push_back(condition());
      }
    }
    if (peek_kw("GROUP")) {
      next();
      expect_kw("BY");
      q.group_by = ident();
    }
    if (peek_kw("ORDER")) {
      next();
      expect_kw("BY");
      if (peek_agg()) {
        q.order_by = item().label;
      } else {
        q.order_by = ident();
      }
      if (peek_kw("DESC")) {
        next();
        q.order_desc = true;
      } else if (peek_kw("ASC")) {
        next();
      }
    }
    if (peek_kw("LIMIT")) {
      next();
      const auto& t = next();
      if (t.kind != Tok::number) throw ParseError("LIMIT expects a number");
      q.limit = static_cast<std::size_t>(std::stoull(t.text));
    }
    if (peek_sym(";")) next();
    if (toks_[pos_].kind != Tok::end) throw ParseError("unexpected '" + toks_[pos_].text + "' after query");
    return q;
  }

 private:
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool peek_sym(std::string_view s) const {
    return toks_[pos_].kind == Tok::symbol && toks_[pos_].text == s;
  }
  bool peek_kw(std::string_view kw) const {
    return toks_[pos_].kind == Tok::ident && text::to_upper_ascii(toks_[pos_].text) == kw;
  }
  bool peek_agg() const {
    if (toks_[pos_].kind != Tok::ident) return false;
    auto up = text::to_upper_ascii(toks_[pos_].text);
    return (up == "COUNT" || up == "SUM" || up == "AVG" || up == "MIN" || up == "MAX") &&
           toks_[pos_ + 1].kind == Tok::symbol && toks_[pos_ + 1].text == "(";
  }
  void expect_kw(std::string_view kw) {
    if (!peek_kw(kw)) throw ParseError("expected " + std::string(kw) + " near '" + toks_[pos_].text + "'");
    next();
  }
  void expect_sym(std::string_view s) {
    if (!peek_sym(s)) throw ParseError("expected '" + std::string(s) + "' near '" + toks_[pos_].text + "'");
    next();
  }
  std::string ident() {
    const auto& t = next();
    if (t.kind != Tok::ident) throw ParseError("expected identifier near '" + t.text + "'");
    return t.text;
  }

  SelectItem item() {
    SelectItem it;
    if (peek_agg()) {
      auto up = text::to_upper_ascii(next().text);
      it.agg = up == "COUNT" ? Agg::count
               : up == "SUM" ? Agg::sum
               : up == "AVG" ? Agg::avg
               : up == "MIN" ? Agg::min
                             : Agg::max;
      expect_sym("(");
      if (peek_sym("*")) {
        if (it.agg != Agg::count) throw ParseError("only COUNT accepts *");
        next();
        it.column = "*";
      } else {
        it.column = ident();
      }
      expect_sym(")");
      it.label = text::to_lower_ascii(up) + "(" + it.column + ")";
    } else {
      it.column = ident();
      it.label = it.column;
    }
    if (peek_kw("AS")) {
      next();
      it.label = ident();
    }
    return it;
  }

  Condition condition() {
    Condition c;
    c.column = ident();
    if (peek_kw("LIKE")) {
      next();
      c.op = "LIKE";
    } else {
      const auto& t = next();
      static constexpr std::string_view kOps[] = {"=", "!=", "<>", "<", "<=", ">", ">="};
      if (t.kind != Tok::symbol || std::find(std::begin(kOps), std::end(kOps), t.text) == std::end(kOps)) {
        throw ParseError("expected comparison operator near '" + t.text + "'");
      }
      c.op = t.text == "<>" ? "!=" : t.text;
    }
    const auto& v = next();
    if (v.kind == Tok::number) {
      c.value_is_number = true;
    } else if (v.kind != Tok::string) {
      throw ParseError("expected literal near '" + v.text + "'");
    }
    c.value = v.text;
    return c;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::optional<double> as_number(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// -1, 0, 1; numeric when both sides parse as numbers.
int compare_values(std::string_view a, std::string_view b) {
  auto na = as_number(a);
  auto nb = as_number(b);
  if (na && nb) return *na < *nb ? -1 : (*na > *nb ? 1 : 0);
  int c = a.compare(b);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool like(std::string_view value, std::string_view pattern) {
  // '%' matches any run, '_' one byte.
  std::size_t v = 0, p = 0, star_p = std::string_view::npos, star_v = 0;
  while (v < value.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == value[v])) {
      ++v;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star_p = p++;
      star_v = v;
    } else if (star_p != std::string_view::npos) {
      p = star_p + 1;
      v = ++star_v;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

bool holds(const Condition& c, std::string_view cell) {
  if (c.op == "LIKE") return like(cell, c.value);
  int cmp = compare_values(cell, c.value);
  if (c.op == "=") return cmp == 0;
  if (c.op == "!=") return cmp != 0;
  if (c.op == "<") return cmp < 0;
  if (c.op == "<=") return cmp <= 0;
  if (c.op == ">") return cmp > 0;
  return cmp >= 0;
}

std::size_t require_column(const Table& t, std::string_view col) {
  auto idx = t.column_index(col);
  if (idx == std::string::npos) {
    throw LookupError("column '" + std::string(col) + "' does not exist in table '" + t.name + "'");
  }
  return idx;
}

std::string aggregate(const SelectItem& item, const Table& t,
                      const std::vector<const std::vector<std::string>*>& rows) {
  if (item.agg == Agg::count) {
    if (item.column == "*") return std::to_string(rows.size());
    auto idx = require_column(t, item.column);
    std::size_t n = 0;
    for (const auto* r : rows) {
      if ((*r)[idx] != "NULL") ++n;
    }
    return std::to_string(n);
  }
  auto idx = require_column(t, item.column);
  if (item.agg == Agg::min || item.agg == Agg::max) {
    const std::string* best = nullptr;
    for (const auto* r : rows) {
      const auto& v = (*r)[idx];
      if (!best || (item.agg == Agg::min ? compare_values(v, *best) < 0 : compare_values(v, *best) > 0)) {
        best = &v;
      }
    }
    return best ? *best : "NULL";
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* r : rows) {
    auto v = as_number((*r)[idx]);
    if (!v) continue;
    sum += *v;
    ++n;
  }
  if (n == 0) return "NULL";
  return format_number(item.agg == Agg::sum ? sum : sum / static_cast<double>(n));
}

}  // namespace

ResultSet execute_select(const SimulatedInstance& instance, std::string_view sql) {
  Query q = Parser(tokenize(sql)).parse();
  const Table* table = instance.find_table(q.table);
  if (!table) throw LookupError("relation \"" + q.table + "\" does not exist");

  std::vector<std::pair<std::size_t, const Condition*>> filters;
  for (const auto& c : q.where) filters.emplace_back(require_column(*table, c.column), &c);

  std::vector<const std::vector<std::string>*> rows;
  for (const auto& r : table->rows) {
    bool keep = std::all_of(filters.begin(), filters.end(),
                            [&](const auto& f) { return holds(*f.second, r[f.first]); });
    if (keep) rows.push_back(&r);
  }

  ResultSet rs;
  const bool has_agg = std::any_of(q.items.begin(), q.items.end(),
                                   [](const SelectItem& i) { return i.agg != Agg::none; });
  if (q.star) {
    if (q.group_by) throw ParseError("SELECT * cannot be combined with GROUP BY");
    for (const auto& c : table->columns) rs.columns.push_back(c.name);
    for (const auto* r : rows) rs.rows.push_back(*r);
  } else if (q.group_by) {
    auto gidx = require_column(*table, *q.group_by);
    std::vector<std::string> keys;
    std::map<std::string, std::vector<const std::vector<std::string>*>> groups;
    for (const auto* r : rows) {
      auto [it, inserted] = groups.try_emplace((*r)[gidx]);
      if (inserted) keys.push_back((*r)[gidx]);
      it->second.push_back(r);
    }
    std::sort(keys.begin(), keys.end(),
              [](const std::string& a, const std::string& b) { return compare_values(a, b) < 0; });
    for (const auto& it : q.items) rs.columns.push_back(it.label);
    for (const auto& key : keys) {
      std::vector<std::string> out;
      for (const auto& it : q.items) {
        if (it.agg == Agg::none) {
          if (text::to_lower_ascii(it.column) != text::to_lower_ascii(*q.group_by)) {
            throw ParseError("column '" + it.column + "' must appear in GROUP BY");
          }
          out.push_back(key);
        } else {
          out.push_back(aggregate(it, *table, groups[key]));
        }
      }
      rs.rows.push_back(std::move(out));
    }
  } else if (has_agg) {
    std::vector<std::string> out;
    for (const auto& it : q.items) {
      if (it.agg == Agg::none) throw ParseError("column '" + it.column + "' must appear in GROUP BY");
      rs.columns.push_back(it.label);
      out.push_back(aggregate(it, *table, rows));
    }
    rs.rows.push_back(std::move(out));
  } else {
    std::vector<std::size_t> idx;
    for (const auto& it : q.items) {
      idx.push_back(require_column(*table, it.column));
      rs.columns.push_back(it.label);
    }
    for (const auto* r : rows) {
      std::vector<std::string> out;
      for (auto i : idx) out.push_back((*r)[i]);
      rs.rows.push_back(std::move(out));
    }
  }

  if (q.order_by) {
    std::size_t oidx = std::string::npos;
    for (std::size_t i = 0; i < rs.columns.size(); ++i) {
      if (text::to_lower_ascii(rs.columns[i]) == text::to_lower_ascii(*q.order_by)) oidx = i;
    }
    if (oidx == std::string::npos) throw LookupError("ORDER BY column '" + *q.order_by + "' is not selected");
    std::stable_sort(rs.rows.begin(), rs.rows.end(), [&](const auto& a, const auto& b) {
      int c = compare_values(a[oidx], b[oidx]);
      return q.order_desc ? c > 0 : c < 0;
    });
  }
  if (q.limit && rs.rows.size() > *q.limit) rs.rows.resize(*q.limit);
  return rs;
}

}  // namespace dqa
