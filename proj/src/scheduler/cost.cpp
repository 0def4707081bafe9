#include "treetx/scheduler/cost.hpp"

namespace treetx::sched {

CostReport cost_report(const std::vector<SyntaxTree>& batch) {
  CostReport report;
  for (const auto& tree : batch) {
    validate(tree);
    const std::uint64_t n = tree.size();
    report.nodes += n;
    report.full_attention_cells += n * n;
    for (const auto& node : tree.nodes) {
      const std::uint64_t k = node.children.size();
      report.attention_cells += k * k;
      report.parental_cells += k;
    }
  }
  return report;
}

}  // namespace treetx::sched
