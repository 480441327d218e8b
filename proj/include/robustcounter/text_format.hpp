#pragma once

// Line-oriented model document:
//
//   #vars
//   x continuous 0 inf
//   y binary 0 1
//   #obj
//   max 3*x + 2*y
//   #cons
//   c1: 1*x + 1*y <= 4
//   c2: 1*x + CONE(0.2; 1*x, 2*y; 100) <= 10
//   #end
//
// Lines starting with '%' are comments. The closing #end marker is mandatory
// so that a truncated file never parses as a smaller valid model.

#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "robustcounter/model.hpp"

namespace robustcounter {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  if (v == kInfinity) return "inf";
  if (v == -kInfinity) return "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

class LineCursor {
 public:
  LineCursor(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool consume(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view token) {
    if (!consume(token)) fail("expected '" + std::string(token) + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_, pos_ + 1, what);
  }

  bool starts_number() {
    skip_space();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') return true;
    if (text_.substr(pos_, 3) == "inf") return true;
    if ((c == '-' || c == '+') && pos_ + 1 < text_.size()) {
      const char d = text_[pos_ + 1];
      return (d >= '0' && d <= '9') || d == '.' || text_.substr(pos_ + 1, 3) == "inf";
    }
    return false;
  }

  double number() {
    skip_space();
    std::size_t p = pos_;
    double sign = 1.0;
    if (p < text_.size() && (text_[p] == '-' || text_[p] == '+')) {
      if (text_[p] == '-') sign = -1.0;
      ++p;
    }
    if (text_.substr(p, 3) == "inf") {
      pos_ = p + 3;
      return sign * kInfinity;
    }
    double value = 0.0;
    const char* first = text_.data() + p;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return sign * value;
  }

  std::string_view name() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c <= ' ' || c == '*' || c == ':' || c == ';' || c == ',' || c == '(' || c == ')' ||
          c == '+' || c == '<' || c == '>' || c == '=') {
        break;
      }
      ++pos_;
    }
    if (pos_ == start) fail("expected a name");
    return text_.substr(start, pos_ - start);
  }

  std::size_t column() const { return pos_ + 1; }
  std::size_t line() const { return line_; }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

inline VarId lookup(const Model& model, LineCursor& cur, std::string_view name) {
  auto id = model.find_variable(name);
  if (!id) cur.fail("unknown variable '" + std::string(name) + "'");
  return *id;
}

// term := number '*' name | number | name
inline void parse_term(const Model& model, LineCursor& cur, double sign,
                       std::vector<Term>& terms, double& constant) {
  if (cur.starts_number()) {
    const double coef = sign * cur.number();
    if (cur.consume("*")) {
      terms.push_back(Term{lookup(model, cur, cur.name()), coef});
    } else {
      constant += coef;
    }
  } else {
    terms.push_back(Term{lookup(model, cur, cur.name()), sign});
  }
}

inline ConeTerm parse_cone(const Model& model, LineCursor& cur) {
  ConeTerm cone;
  cone.scale = cur.number();
  cur.expect(";");
  if (cur.peek() != ';') {
    while (true) {
      double constant = 0.0;
      std::vector<Term> one;
      parse_term(model, cur, 1.0, one, constant);
      if (one.size() != 1 || constant != 0.0) cur.fail("cone components must be coeff*name");
      cone.components.push_back(one.front());
      if (!cur.consume(",")) break;
    }
  }
  cur.expect(";");
  cone.constant_inside = cur.number();
  cur.expect(")");
  return cone;
}

// Sum of terms until a relational operator or end of line. A CONE(...) term
// is accepted only when `cone` is non-null.
inline LinExpr parse_expression(const Model& model, LineCursor& cur,
                                std::optional<ConeTerm>* cone) {
  std::vector<Term> terms;
  double constant = 0.0;
  double sign = 1.0;
  if (cur.consume("-")) sign = -1.0;
  else cur.consume("+");
  while (true) {
    if (cur.consume("CONE(")) {
      if (!cone) cur.fail("CONE term not allowed here");
      if (cone->has_value()) cur.fail("at most one CONE term per constraint");
      if (sign < 0) cur.fail("CONE term must be added, not subtracted");
      *cone = parse_cone(model, cur);
    } else {
      parse_term(model, cur, sign, terms, constant);
    }
    if (cur.consume("+")) {
      sign = 1.0;
    } else if (cur.consume("-")) {
      sign = -1.0;
    } else {
      break;
    }
  }
  return LinExpr::from_terms(std::move(terms), constant);
}

inline std::string format_expression(const Model& model, const LinExpr& expr,
                                     const ConeTerm* cone = nullptr) {
  std::string out;
  auto append = [&](const std::string& piece) {
    if (!out.empty()) out += " + ";
    out += piece;
  };
  for (const Term& t : expr.terms()) {
    append(format_number(t.coef) + "*" + model.variable(t.var).name);
  }
  if (expr.constant() != 0.0 || (expr.empty() && !cone)) append(format_number(expr.constant()));
  if (cone) {
    std::string body = "CONE(" + format_number(cone->scale) + "; ";
    for (std::size_t k = 0; k < cone->components.size(); ++k) {
      if (k) body += ", ";
      body += format_number(cone->components[k].coef) + "*" +
              model.variable(cone->components[k].var).name;
    }
    body += "; " + format_number(cone->constant_inside) + ")";
    append(body);
  }
  return out;
}

}  // namespace detail

inline std::string export_text(const Model& model) {
  std::ostringstream out;
  out << "#vars\n";
  for (const Variable& v : model.variables()) {
    out << v.name << ' ' << to_string(v.kind) << ' ' << format_number(v.lower) << ' '
        << format_number(v.upper) << '\n';
  }
  out << "#obj\n"
      << (model.objective().sense == ObjSense::kMax ? "max " : "min ")
      << detail::format_expression(model, model.objective().expr) << '\n';
  out << "#cons\n";
  for (const Constraint& con : model.constraints()) {
    out << con.label << ": "
        << detail::format_expression(model, con.lhs, con.cone ? &*con.cone : nullptr) << ' '
        << to_string(con.sense) << ' ' << format_number(con.rhs) << '\n';
  }
  out << "#end\n";
  return out.str();
}

inline Model import_text(std::string_view text) {
  enum class Section { kNone, kVars, kObj, kCons, kEnd };
  Model model;
  Section section = Section::kNone;
  bool saw_objective = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t stop = text.find('\n', start);
    if (stop == std::string_view::npos) stop = text.size();
    std::string_view line = text.substr(start, stop - start);
    start = stop + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    detail::LineCursor cur(line, line_no);
    if (cur.at_end() || cur.peek() == '%') {
      if (stop == text.size()) break;
      continue;
    }
    if (section == Section::kEnd) cur.fail("content after #end");
    if (cur.peek() == '#') {
      if (cur.consume("#vars")) section = Section::kVars;
      else if (cur.consume("#obj")) section = Section::kObj;
      else if (cur.consume("#cons")) section = Section::kCons;
      else if (cur.consume("#end")) section = Section::kEnd;
      else cur.fail("unknown section header");
      if (!cur.at_end()) cur.fail("unexpected text after section header");
    } else {
      try {
        switch (section) {
          case Section::kNone:
            cur.fail("content before the first section header");
          case Section::kVars: {
            const std::string name(cur.name());
            const std::string_view kind_text = cur.name();
            VarKind kind;
            if (kind_text == "continuous") kind = VarKind::kContinuous;
            else if (kind_text == "binary") kind = VarKind::kBinary;
            else if (kind_text == "integer") kind = VarKind::kInteger;
            else cur.fail("unknown variable kind '" + std::string(kind_text) + "'");
            const double lower = cur.number();
            const double upper = cur.number();
            if (!cur.at_end()) cur.fail("unexpected text after variable bounds");
            model.add_variable(name, kind, lower, upper);
            break;
          }
          case Section::kObj: {
            if (saw_objective) cur.fail("duplicate objective line");
            ObjSense sense;
            if (cur.consume("max")) sense = ObjSense::kMax;
            else if (cur.consume("min")) sense = ObjSense::kMin;
            else cur.fail("objective must start with max or min");
            LinExpr expr = detail::parse_expression(model, cur, nullptr);
            if (!cur.at_end()) cur.fail("unexpected text in objective");
            model.set_objective(sense, std::move(expr));
            saw_objective = true;
            break;
          }
          case Section::kCons: {
            const std::string label(cur.name());
            cur.expect(":");
            std::optional<ConeTerm> cone;
            LinExpr lhs = detail::parse_expression(model, cur, &cone);
            Sense sense;
            if (cur.consume("<=")) sense = Sense::kLe;
            else if (cur.consume(">=")) sense = Sense::kGe;
            else if (cur.consume("=")) sense = Sense::kEq;
            else cur.fail("expected <=, >= or =");
            const double rhs = cur.number();
            if (!cur.at_end()) cur.fail("unexpected text after right-hand side");
            model.add_constraint(std::move(lhs), sense, rhs, label, std::move(cone));
            break;
          }
          case Section::kEnd:
            break;
        }
      } catch (const ModelError& e) {
        throw ParseError(line_no, 1, e.what());
      }
    }
    if (stop == text.size()) break;
  }
  if (section != Section::kEnd) {
    throw ParseError(line_no, 1, "document ends without #end (truncated?)");
  }
  return model;
}

inline Model read_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return import_text(buf.str());
}

inline void write_model_file(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << export_text(model);
}

}  // namespace robustcounter
