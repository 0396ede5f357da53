#include "mrset/expr.hpp"

#include <algorithm>
#include <cctype>

#include "mrset/error.hpp"

namespace mrset {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprTree run() {
    ExprTree t = expr();
    skip_space();
    if (pos_ != text_.size()) error("unexpected trailing input");
    return t;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::kParseError, what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  ExprTree expr() {
    skip_space();
    if (pos_ >= text_.size()) error("expected a set name or '('");
    if (text_[pos_] == '(') {
      ++pos_;
      ExprTree left = expr();
      skip_space();
      if (pos_ >= text_.size()) error("expected '&' or '|'");
      NodeKind kind;
      if (text_[pos_] == '&') kind = NodeKind::kIntersect;
      else if (text_[pos_] == '|') kind = NodeKind::kUnion;
      else error("expected '&' or '|'");
      ++pos_;
      ExprTree right = expr();
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') error("expected ')'");
      ++pos_;
      return ExprTree::combine(kind, left, right);
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && name_char(text_[pos_])) ++pos_;
    if (pos_ == start) error("expected a set name or '('");
    return ExprTree::leaf(std::string(text_.substr(start, pos_ - start)));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprTree ExprTree::parse(std::string_view text) { return Parser(text).run(); }

ExprTree ExprTree::leaf(std::string name) {
  ExprTree t;
  t.nodes_.push_back({NodeKind::kLeaf, std::move(name), -1, -1, -1});
  return t;
}

int ExprTree::append(const ExprTree& t, int v) {
  const ExprNode& n = t.node(v);
  ExprNode copy{n.kind, n.name, -1, -1, -1};
  if (n.kind != NodeKind::kLeaf) {
    copy.left = append(t, n.left);
    copy.right = append(t, n.right);
  }
  nodes_.push_back(copy);
  const int id = static_cast<int>(nodes_.size()) - 1;
  if (copy.left >= 0) {
    nodes_[static_cast<std::size_t>(copy.left)].parent = id;
    nodes_[static_cast<std::size_t>(copy.right)].parent = id;
  }
  return id;
}

ExprTree ExprTree::combine(NodeKind kind, const ExprTree& left, const ExprTree& right) {
  if (kind == NodeKind::kLeaf) fail(ErrorCode::kBadParameter, "combine needs an operator");
  ExprTree t;
  t.nodes_.reserve(left.size() + right.size() + 1);
  const int l = t.append(left, left.root());
  const int r = t.append(right, right.root());
  t.nodes_.push_back({kind, {}, l, r, -1});
  const int id = t.root();
  t.nodes_[static_cast<std::size_t>(l)].parent = id;
  t.nodes_[static_cast<std::size_t>(r)].parent = id;
  return t;
}

std::vector<int> ExprTree::leaves() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(size()); ++i)
    if (node(i).kind == NodeKind::kLeaf) out.push_back(i);
  return out;
}

std::vector<std::string> ExprTree::leaf_names() const {
  std::vector<std::string> out;
  for (const int v : leaves())
    if (std::find(out.begin(), out.end(), node(v).name) == out.end()) out.push_back(node(v).name);
  return out;
}

bool ExprTree::pure_intersection() const {
  return std::none_of(nodes_.begin(), nodes_.end(),
                      [](const ExprNode& n) { return n.kind == NodeKind::kUnion; });
}

ExprTree ExprTree::subtree(int v) const {
  ExprTree t;
  t.append(*this, v);
  return t;
}

ExprTree ExprTree::replace_with_leaf(int v, const std::string& name) const {
  if (v == root()) return leaf(name);
  const ExprNode& p = node(node(v).parent);
  const bool is_left = p.left == v;
  const int pid = node(v).parent;
  ExprTree sibling = subtree(is_left ? p.right : p.left);
  ExprTree replaced = is_left ? combine(p.kind, leaf(name), sibling) : combine(p.kind, sibling, leaf(name));
  // Rebuild upward, swapping in the replaced parent.
  int child = pid;
  while (node(child).parent >= 0) {
    const int up = node(child).parent;
    const ExprNode& u = node(up);
    if (u.left == child) replaced = combine(u.kind, replaced, subtree(u.right));
    else replaced = combine(u.kind, subtree(u.left), replaced);
    child = up;
  }
  return replaced;
}

std::string ExprTree::to_string() const {
  std::string out;
  const auto rec = [&](auto&& self, int v) -> void {
    const ExprNode& n = node(v);
    if (n.kind == NodeKind::kLeaf) {
      out += n.name;
      return;
    }
    out += '(';
    self(self, n.left);
    out += n.kind == NodeKind::kIntersect ? " & " : " | ";
    self(self, n.right);
    out += ')';
  };
  rec(rec, root());
  return out;
}

SizeAnnotation annotate(const ExprTree& tree, const SizeMap& sizes) {
  const std::size_t n = tree.size();
  SizeAnnotation a;
  a.psi.assign(n, 0);
  a.psi_star.assign(n, 0);
  a.reduce_partner.assign(n, -1);
  a.nia.assign(n, kRootRegion);
  a.nia_side.assign(n, 0);
  a.first_child.assign(n, -1);

  for (int v = 0; v < static_cast<int>(n); ++v) {
    const ExprNode& nd = tree.node(v);
    const auto i = static_cast<std::size_t>(v);
    if (nd.kind == NodeKind::kLeaf) {
      const auto it = sizes.find(nd.name);
      if (it == sizes.end()) fail(ErrorCode::kUnknownSet, "unknown set '" + nd.name + "'");
      a.psi[i] = it->second;
    } else {
      const std::uint64_t l = a.psi[static_cast<std::size_t>(nd.left)];
      const std::uint64_t r = a.psi[static_cast<std::size_t>(nd.right)];
      a.psi[i] = nd.kind == NodeKind::kUnion ? l + r : std::min(l, r);
    }
  }

  // Parents have larger ids, so walking ids downward visits parents first.
  for (int v = static_cast<int>(n) - 1; v >= 0; --v) {
    const ExprNode& nd = tree.node(v);
    const auto i = static_cast<std::size_t>(v);
    if (nd.parent < 0) {
      a.psi_star[i] = a.psi[i];
      continue;
    }
    const auto p = static_cast<std::size_t>(nd.parent);
    a.psi_star[i] = std::min(a.psi[i], a.psi_star[p]);
    const ExprNode& pn = tree.node(nd.parent);
    if (pn.kind == NodeKind::kIntersect) {
      a.nia[i] = nd.parent;
      a.nia_side[i] = pn.left == v ? 0 : 1;
    } else {
      a.nia[i] = a.nia[p];
      a.nia_side[i] = a.nia_side[p];
    }
    if (a.psi_star[i] < a.psi[i]) {
      if (a.psi[p] == a.psi_star[i]) {
        // psi drops to psi_star here, which only an intersection can do.
        a.reduce_partner[i] = pn.left == v ? pn.right : pn.left;
      } else {
        a.reduce_partner[i] = a.reduce_partner[p];
      }
    }
  }

  for (int v = 0; v < static_cast<int>(n); ++v) {
    const ExprNode& nd = tree.node(v);
    if (nd.kind == NodeKind::kLeaf) continue;
    const auto l = static_cast<std::size_t>(nd.left);
    const auto r = static_cast<std::size_t>(nd.right);
    const bool right_first =
        a.psi_star[r] < a.psi_star[l] || (a.psi_star[r] == a.psi_star[l] && a.psi[r] < a.psi[l]);
    a.first_child[static_cast<std::size_t>(v)] = right_first ? nd.right : nd.left;
  }
  return a;
}

}  // namespace mrset
