#pragma once

#include <optional>
#include <string_view>

namespace slr::detail {

enum class OpType { xfx, xfy, yfx, fy };

struct OpDef {
  int priority;
  OpType type;
};

// Lower priority binds tighter: ';' 1100 > ',' 1000 > '\+' 900 > comparison 700 > arithmetic.
inline std::optional<OpDef> infix_op(std::string_view name) {
  if (name == ":-") return OpDef{1200, OpType::xfx};
  if (name == ";") return OpDef{1100, OpType::xfy};
  if (name == "->") return OpDef{1050, OpType::xfy};
  if (name == ",") return OpDef{1000, OpType::xfy};
  if (name == "=" || name == "\\=" || name == "==" || name == "is" || name == "=:=" || name == "=\\=" ||
      name == "<" || name == ">" || name == ">=" || name == "=<")
    return OpDef{700, OpType::xfx};
  if (name == "+" || name == "-") return OpDef{500, OpType::yfx};
  if (name == "*" || name == "//" || name == "/" || name == "mod") return OpDef{400, OpType::yfx};
  return std::nullopt;
}

inline std::optional<OpDef> prefix_op(std::string_view name) {
  if (name == "\\+") return OpDef{900, OpType::fy};
  if (name == "-") return OpDef{200, OpType::fy};
  return std::nullopt;
}

inline int left_max(const OpDef& op) { return op.type == OpType::yfx ? op.priority : op.priority - 1; }
inline int right_max(const OpDef& op) {
  return (op.type == OpType::xfy || op.type == OpType::fy) ? op.priority : op.priority - 1;
}

}  // namespace slr::detail
