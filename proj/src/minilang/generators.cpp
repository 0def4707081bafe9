#include "treetx/minilang/generators.hpp"

#include <algorithm>
#include <functional>

#include "treetx/core/errors.hpp"
#include "treetx/minilang/grammar.hpp"
#include "treetx/minilang/parser.hpp"

namespace treetx::minilang {

const std::array<std::string_view, kTemplateCount> kTemplateNames = {
    "sum-loop",     "product-loop", "running-max",        "running-min",
    "parity-count", "linear-search", "nested-pair-count", "iterative-recurrence"};

namespace {

using Block = std::vector<std::string>;

std::string join(const Block& stmts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    if (i) out += sep;
    out += stmts[i];
  }
  return out;
}

std::string braced(const Block& body) { return "{ " + join(body) + " }"; }

std::string lit(Rng& rng, std::int64_t lo, std::int64_t hi) { return std::to_string(rng.range(lo, hi)); }

std::vector<std::string> pick_names(Rng& rng, std::size_t count) {
  std::vector<std::string> pool(kIdentifierPool.begin(), kIdentifierPool.end());
  rng.shuffle(pool);
  pool.resize(count);
  return pool;
}

// Role names every template shares. `dead` is never read by the template.
struct Roles {
  std::string acc, i, n, v, aux, dead, other;
};

Roles pick_roles(Rng& rng) {
  auto names = pick_names(rng, 7);
  return {names[0], names[1], names[2], names[3], names[4], names[5], names[6]};
}

std::string loop_condition(Rng& rng, const std::string& i, const std::string& bound) {
  return rng.chance(0.7) ? i + " < " + bound : bound + " > " + i;
}

std::string dead_statement(Rng& rng, const Roles& r) {
  switch (rng.index(4)) {
    case 0: return r.dead + " = " + lit(rng, 0, 50) + ";";
    case 1: return r.dead + " = " + r.other + ";";
    case 2: return r.dead + " * " + lit(rng, 2, 9) + ";";  // expression statement
    default: return r.other + " = " + lit(rng, 0, 9) + ";";
  }
}

void insert_dead(Rng& rng, const Roles& r, Block& top, Block& body) {
  const auto count = rng.index(3);
  for (std::uint64_t k = 0; k < count; ++k) {
    Block& target = rng.chance(0.5) ? top : body;
    const auto at = rng.index(target.size() + 1);
    target.insert(target.begin() + static_cast<std::ptrdiff_t>(at), dead_statement(rng, r));
  }
}

// Builds "inits; [while-loop with body]; return" with shuffled independent inits
// and dead-statement insertion.
std::string assemble(Rng& rng, const Roles& r, Block inits, std::string loop_head,
                     Block body, const std::string& ret, std::string bound_literal) {
  std::string bound = r.n;
  if (rng.chance(0.6)) {
    inits.push_back(r.n + " = " + bound_literal + ";");
  } else {
    bound = bound_literal;
  }
  rng.shuffle(inits);
  // loop_head carries a "@" placeholder for the bound.
  auto pos = loop_head.find('@');
  if (pos != std::string::npos) loop_head.replace(pos, 1, bound);
  Block top = inits;
  const std::size_t loop_slot = top.size();
  top.push_back("");
  top.push_back("return " + ret + ";");
  Block before(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(loop_slot));
  Block after(top.begin() + static_cast<std::ptrdiff_t>(loop_slot) + 1, top.end());
  insert_dead(rng, r, before, body);
  Block program = before;
  program.push_back(loop_head + " " + braced(body));
  program.insert(program.end(), after.begin(), after.end());
  return join(program, "\n") + "\n";
}

std::string increment(const std::string& i) { return i + " = " + i + " + 1;"; }

}  // namespace

std::string generate_template_program(int family, Rng& rng) {
  const Roles r = pick_roles(rng);
  const std::string bound = lit(rng, 3, 150);
  auto head = [&](const std::string& cond) { return "while (" + cond + ")"; };
  switch (family) {
    case 0: {  // sum loop
      std::string acc = rng.chance(0.5) ? r.acc + " = " + r.acc + " + " + r.i + ";"
                                        : r.acc + " = " + r.i + " + " + r.acc + ";";
      return assemble(rng, r, {r.acc + " = 0;", r.i + " = 0;"}, head(loop_condition(rng, r.i, "@")),
                      {acc, increment(r.i)}, r.acc, bound);
    }
    case 1: {  // product loop
      std::string acc = rng.chance(0.5) ? r.acc + " = " + r.acc + " * " + r.i + ";"
                                        : r.acc + " = " + r.i + " * " + r.acc + ";";
      return assemble(rng, r, {r.acc + " = 1;", r.i + " = 1;"}, head(loop_condition(rng, r.i, "@")),
                      {acc, increment(r.i)}, r.acc, bound);
    }
    case 2:
    case 3: {  // running max / min over a pseudo-random sequence
      const bool is_max = family == 2;
      std::string value = r.v + " = (" + r.i + " * " + lit(rng, 2, 40) + " + " + lit(rng, 1, 30) +
                          ") % " + lit(rng, 5, 97) + ";";
      std::string test;
      if (rng.chance(0.5)) {
        test = r.v + (is_max ? " > " : " < ") + r.acc;
      } else {
        test = r.acc + (is_max ? " < " : " > ") + r.v;
      }
      std::string update = "if (" + test + ") { " + r.acc + " = " + r.v + "; }";
      std::string init = r.acc + " = " + (is_max ? lit(rng, 0, 1) : lit(rng, 100, 999)) + ";";
      return assemble(rng, r, {init, r.i + " = 0;"}, head(loop_condition(rng, r.i, "@")),
                      {value, update, increment(r.i)}, r.acc, bound);
    }
    case 4: {  // parity count
      std::string update = "if (" + r.i + " % 2 == " + lit(rng, 0, 1) + ") { " + r.acc + " = " +
                           r.acc + " + 1; }";
      return assemble(rng, r, {r.acc + " = 0;", r.i + " = 0;"}, head(loop_condition(rng, r.i, "@")),
                      {update, increment(r.i)}, r.acc, bound);
    }
    case 5: {  // linear search
      std::string found = r.acc + " == 0";
      std::string cond = rng.chance(0.5) ? loop_condition(rng, r.i, "@") + " and " + found
                                         : found + " and " + loop_condition(rng, r.i, "@");
      std::string test = r.i + " * " + lit(rng, 2, 9) + " == " + r.aux;
      std::string update = "if (" + test + ") { " + r.acc + " = " + r.i + "; }";
      return assemble(rng, r, {r.acc + " = 0;", r.i + " = 0;", r.aux + " = " + lit(rng, 10, 400) + ";"},
                      head(cond), {update, increment(r.i)}, r.acc, bound);
    }
    case 6: {  // nested pair count
      std::string inner = "while (" + loop_condition(rng, r.aux, r.n) + ") { " + r.acc + " = " +
                          r.acc + " + 1; " + increment(r.aux) + " }";
      Roles rr = r;
      // The inner loop always reads n, so the bound must be a variable here.
      Block inits = {r.acc + " = 0;", r.i + " = 0;", r.n + " = " + bound + ";"};
      rng.shuffle(inits);
      Block body = {r.aux + " = " + r.i + " + 1;", inner, increment(r.i)};
      Block top = inits;
      insert_dead(rng, rr, top, body);
      top.push_back(head(loop_condition(rng, r.i, r.n)) + " " + braced(body));
      top.push_back("return " + r.acc + ";");
      return join(top, "\n") + "\n";
    }
    case 7: {  // iterative recurrence
      std::string step = rng.chance(0.5)
                             ? r.aux + " = " + r.acc + " + " + r.v + ";"
                             : r.aux + " = " + r.acc + " * " + lit(rng, 2, 5) + " + " + r.v + ";";
      return assemble(rng, r, {r.acc + " = 0;", r.v + " = 1;", r.i + " = 0;"},
                      head(loop_condition(rng, r.i, "@")),
                      {step, r.acc + " = " + r.v + ";", r.v + " = " + r.aux + ";", increment(r.i)},
                      r.acc, bound);
    }
    default:
      throw Error("unknown template family " + std::to_string(family));
  }
}

std::vector<GeneratedProgram> gen_classify_corpus(int classes, int per_class, std::uint64_t seed) {
  if (classes < 2 || classes > kTemplateCount) {
    throw Error("classes must be in [2, " + std::to_string(kTemplateCount) + "], got " +
                std::to_string(classes));
  }
  if (per_class < 0) throw Error("per_class must be non-negative");
  std::vector<GeneratedProgram> out;
  const auto total = static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class);
  out.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    Rng rng(Rng::derive(seed, k));
    const int family = static_cast<int>(k % static_cast<std::size_t>(classes));
    GeneratedProgram program;
    program.source = generate_template_program(family, rng);
    program.tree = parse(program.source);
    program.tree.label = family;
    out.push_back(std::move(program));
  }
  return out;
}

namespace {

struct Expr {
  std::string text;
  int prec;  // 7 = atom
};

int precedence(std::string_view op) {
  if (op == "or") return 1;
  if (op == "and") return 2;
  if (op == "==" || op == "!=") return 3;
  if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  return 6;
}

Expr combine(const Expr& lhs, std::string_view op, const Expr& rhs) {
  const int p = precedence(op);
  std::string l = lhs.prec < p ? "(" + lhs.text + ")" : lhs.text;
  std::string r = rhs.prec <= p ? "(" + rhs.text + ")" : rhs.text;
  return {l + " " + std::string(op) + " " + r, p};
}

class OperatorProgramBuilder {
 public:
  OperatorProgramBuilder(Rng& rng) : rng_(rng), vars_(pick_names(rng, 3 + rng.index(4))) {}

  Block block(int budget, int nesting) {
    Block out;
    while (budget > 0) {
      if (rng_.chance(0.15)) out.push_back(filler());
      const int used = statement(out, budget, nesting);
      budget -= used;
    }
    if (out.empty()) out.push_back(filler());
    return out;
  }

  Expr arith(int budget) {
    if (budget == 0) return atom();
    static const std::vector<double> weights = {0.4, 0.25, 0.2, 0.08, 0.07};
    static const std::array<std::string_view, 5> ops = {"+", "-", "*", "/", "%"};
    const auto op = ops[rng_.weighted(weights)];
    const int left = static_cast<int>(rng_.index(static_cast<std::uint64_t>(budget)));
    return combine(arith(left), op, arith(budget - 1 - left));
  }

  Expr condition(int budget) {
    if (budget >= 3 && rng_.chance(0.3)) {
      const auto op = rng_.chance(0.6) ? "and" : "or";
      const int left = 1 + static_cast<int>(rng_.index(static_cast<std::uint64_t>(budget - 2)));
      return combine(condition(left), op, condition(budget - 1 - left));
    }
    static const std::vector<double> weights = {0.3, 0.15, 0.15, 0.1, 0.2, 0.1};
    static const std::array<std::string_view, 6> ops = {"<", ">", "<=", ">=", "==", "!="};
    const auto op = ops[rng_.weighted(weights)];
    const int left = static_cast<int>(rng_.index(static_cast<std::uint64_t>(budget)));
    return combine(arith(left), op, arith(budget - 1 - left));
  }

 private:
  const std::string& var() { return vars_[rng_.index(vars_.size())]; }

  Expr atom() {
    if (rng_.chance(0.65)) return {var(), 7};
    const double u = rng_.uniform();
    if (u < 0.1) return {"0", 7};
    if (u < 0.9) return {lit(rng_, 1, 20), 7};
    return {lit(rng_, 100, 999), 7};
  }

  std::string filler() {
    return var() + " = " + (rng_.chance(0.5) ? atom().text : lit(rng_, 0, 9)) + ";";
  }

  // Appends one statement using between 1 and `budget` operators; returns the count.
  int statement(Block& out, int budget, int nesting) {
    std::vector<double> weights = {2.0, 3.0, 2.0, nesting < 2 ? 2.0 : 0.0,
                                   nesting < 2 && budget >= 2 ? 1.5 : 0.0};
    switch (rng_.weighted(weights)) {
      case 0: {  // increment idiom
        const auto& x = var();
        out.push_back(x + " = " + x + (rng_.chance(0.8) ? " + " : " - ") + "1;");
        return 1;
      }
      case 1: {  // assignment
        const int b = 1 + static_cast<int>(rng_.index(static_cast<std::uint64_t>(std::min(budget, 3))));
        out.push_back(var() + " = " + arith(b).text + ";");
        return b;
      }
      case 2: {  // accumulation
        const int b = static_cast<int>(rng_.index(static_cast<std::uint64_t>(std::min(budget - 1, 2) + 1)));
        const auto& s = var();
        const double u = rng_.uniform();
        const std::string_view op = u < 0.7 ? "+" : (u < 0.85 ? "*" : "-");
        out.push_back(s + " = " + combine({s, 7}, op, arith(b)).text + ";");
        return 1 + b;
      }
      case 3: {  // if
        const int c = 1 + static_cast<int>(rng_.index(static_cast<std::uint64_t>(std::min(budget, 3))));
        const int body = static_cast<int>(rng_.index(static_cast<std::uint64_t>(std::min(budget - c, 3) + 1)));
        std::string stmt = "if (" + condition(c).text + ") " + braced(block(body, nesting + 1));
        int extra = 0;
        if (budget - c - body > 0 && rng_.chance(0.25)) {
          extra = 1 + static_cast<int>(rng_.index(static_cast<std::uint64_t>(std::min(budget - c - body, 2))));
          stmt += " else " + braced(block(extra, nesting + 1));
        }
        out.push_back(stmt);
        return c + body + extra;
      }
      default: {  // counting loop idiom: two operators plus the body
        const int body = static_cast<int>(rng_.index(static_cast<std::uint64_t>(std::min(budget - 2, 3) + 1)));
        const auto& i = var();
        std::string bound = rng_.chance(0.5) ? var() : lit(rng_, 2, 50);
        Block inner = body > 0 ? block(body, nesting + 1) : Block{};
        inner.push_back(i + " = " + i + " + 1;");
        out.push_back("while (" + i + " < " + bound + ") " + braced(inner));
        return 2 + body;
      }
    }
  }

  Rng& rng_;
  std::vector<std::string> vars_;
};

}  // namespace

std::string generate_operator_program(int operators, Rng& rng) {
  OperatorProgramBuilder builder(rng);
  Block program;
  int budget = operators;
  int ret = 0;
  if (budget > 0 && rng.chance(0.5)) {
    ret = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(budget, 2))));
    budget -= ret;
  }
  program = builder.block(budget, 0);
  if (ret > 0 || rng.chance(0.3)) program.push_back("return " + builder.arith(ret).text + ";");
  return join(program, "\n") + "\n";
}

std::vector<WrongOpSample> gen_wrongop_corpus(int programs, int min_ops, std::uint64_t seed,
                                              double mean_ops) {
  if (programs < 0) throw Error("programs must be non-negative");
  if (min_ops < 2) throw Error("min_ops must be at least 2, got " + std::to_string(min_ops));
  if (mean_ops <= 0.0) throw Error("mean_ops must be positive");
  const auto& vocab = default_vocabulary();
  std::vector<WrongOpSample> out;
  out.reserve(static_cast<std::size_t>(programs));
  for (int k = 0; k < programs; ++k) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(k)));
    const double extra = std::max(mean_ops - min_ops, 0.0);
    const int ops = min_ops + static_cast<int>(rng.poisson(extra));
    WrongOpSample sample;
    sample.source = generate_operator_program(ops, rng);
    SyntaxTree pristine = parse(sample.source);
    sample.record = mutate_operator(pristine, vocab, rng);
    out.push_back(std::move(sample));
  }
  return out;
}

SyntaxTree label_identifier_roles(const SyntaxTree& tree, const Vocabulary& vocab) {
  SyntaxTree out = tree;
  out.node_labels.clear();
  const auto ident = vocab.types.lookup(sym::kIdent);
  const auto assign = vocab.types.lookup(sym::kAssign);
  const auto if_type = vocab.types.lookup(sym::kIf);
  const auto while_type = vocab.types.lookup(sym::kWhile);
  auto par = parents(tree);
  for (const auto& node : tree.nodes) {
    if (node.type_id != ident) continue;
    const auto parent = par[node.id];
    if (parent && tree.node(*parent).type_id == assign && tree.node(*parent).children.front() == node.id) {
      out.node_labels[node.id] = 0;
      continue;
    }
    int role = 1;
    NodeId cur = node.id;
    for (auto p = par[cur]; p; cur = *p, p = par[cur]) {
      const auto& pn = tree.node(*p);
      if ((pn.type_id == if_type || pn.type_id == while_type) && pn.children.size() > 2 &&
          pn.children[2] == cur) {
        role = 2;
        break;
      }
    }
    out.node_labels[node.id] = role;
  }
  return out;
}

}  // namespace treetx::minilang
