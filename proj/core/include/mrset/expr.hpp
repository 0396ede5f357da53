#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mrset {

enum class NodeKind { kLeaf, kUnion, kIntersect };

struct ExprNode {
  NodeKind kind = NodeKind::kLeaf;
  std::string name;  // leaves only
  int left = -1;
  int right = -1;
  int parent = -1;
};

// Binary union/intersection expression over named sets. Nodes are stored in
// post-order, so children precede their parent and the root is last.
class ExprTree {
 public:
  // Grammar: expr := NAME | "(" expr OP expr ")", OP := "&" | "|",
  // NAME := [A-Za-z0-9_]+. Throws ParseError with the byte offset.
  static ExprTree parse(std::string_view text);
  static ExprTree leaf(std::string name);
  static ExprTree combine(NodeKind kind, const ExprTree& left, const ExprTree& right);

  const std::vector<ExprNode>& nodes() const noexcept { return nodes_; }
  const ExprNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int root() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Leaf ids, left to right.
  std::vector<int> leaves() const;
  // Distinct leaf names in first-appearance order.
  std::vector<std::string> leaf_names() const;
  // Every internal node is an intersection.
  bool pure_intersection() const;
  // Copy of the subtree rooted at v.
  ExprTree subtree(int v) const;
  // Copy with the subtree at v replaced by a leaf.
  ExprTree replace_with_leaf(int v, const std::string& name) const;

  std::string to_string() const;

 private:
  int append(const ExprTree& t, int v);

  std::vector<ExprNode> nodes_;
};

inline constexpr int kRootRegion = -1;

// Per-node size bounds. psi is the largest possible result size of the
// subexpression; psi_star the least psi on the path to the root.
struct SizeAnnotation {
  std::vector<std::uint64_t> psi;
  std::vector<std::uint64_t> psi_star;
  // Sibling subtree whose psi equals psi_star(v), at the lowest ancestor
  // intersection achieving it; -1 when psi_star(v) == psi(v).
  std::vector<int> reduce_partner;
  // Nearest intersection ancestor, or kRootRegion.
  std::vector<int> nia;
  // Which child of nia(v) (0 left, 1 right) contains v.
  std::vector<int> nia_side;
  // Child visited first at each internal node: smaller psi_star, then
  // smaller psi, then left.
  std::vector<int> first_child;
};

using SizeMap = std::map<std::string, std::uint64_t, std::less<>>;

// Throws UnknownSet when a leaf name is missing from sizes.
SizeAnnotation annotate(const ExprTree& tree, const SizeMap& sizes);

}  // namespace mrset
