// Copyright 2026 The placeprog Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "placeprog/program.hpp"

#include "placeprog/error.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace placeprog {

const char* to_string(ConstraintType t) {
  switch (t) {
    case ConstraintType::Attach: return "attach";
    case ConstraintType::ReachableByArm: return "reachable_by_arm";
    case ConstraintType::Align: return "align";
    case ConstraintType::Face: return "face";
  }
  return "?";
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Null: return "null";
  }
  return "?";
}

std::optional<ConstraintType> constraint_type_from_string(std::string_view s) {
  if (s == "attach") return ConstraintType::Attach;
  if (s == "reachable_by_arm") return ConstraintType::ReachableByArm;
  if (s == "align") return ConstraintType::Align;
  if (s == "face") return ConstraintType::Face;
  return std::nullopt;
}

std::optional<Direction> direction_from_string(std::string_view s) {
  if (s == "up") return Direction::Up;
  if (s == "down") return Direction::Down;
  if (s == "left") return Direction::Left;
  if (s == "right") return Direction::Right;
  return std::nullopt;
}

Orientation to_world(Direction d, Orientation facing) {
  switch (d) {
    case Direction::Up: return facing;
    case Direction::Down: return opposite(facing);
    case Direction::Left: return turn_left(facing);
    case Direction::Right: return turn_right(facing);
    case Direction::Null: break;
  }
  throw Error(ErrorKind::Validation, "null direction has no world orientation");
}

bool is_well_formed(const Constraint& c) {
  if (c.reference.empty()) return false;
  const bool located = c.type == ConstraintType::Attach || c.type == ConstraintType::ReachableByArm;
  return located ? c.direction != Direction::Null : c.direction == Direction::Null;
}

NodePtr ProgramNode::leaf(Constraint c) {
  auto n = std::make_shared<ProgramNode>();
  n->kind = Kind::Leaf;
  n->constraint = std::move(c);
  return n;
}

NodePtr ProgramNode::conj(NodePtr l, NodePtr r) {
  auto n = std::make_shared<ProgramNode>();
  n->kind = Kind::And;
  n->left = std::move(l);
  n->right = std::move(r);
  return n;
}

NodePtr ProgramNode::disj(NodePtr l, NodePtr r) {
  auto n = std::make_shared<ProgramNode>();
  n->kind = Kind::Or;
  n->left = std::move(l);
  n->right = std::move(r);
  return n;
}

namespace {

void collect_leaves(const NodePtr& n, std::vector<Constraint>& out) {
  if (!n) return;
  if (n->kind == ProgramNode::Kind::Leaf) {
    out.push_back(n->constraint);
    return;
  }
  collect_leaves(n->left, out);
  collect_leaves(n->right, out);
}

int count_nodes(const NodePtr& n) { return n ? 1 + count_nodes(n->left) + count_nodes(n->right) : 0; }

int tree_depth(const NodePtr& n) { return n ? 1 + std::max(tree_depth(n->left), tree_depth(n->right)) : 0; }

bool same_tree(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  if (a->kind == ProgramNode::Kind::Leaf) return a->constraint == b->constraint;
  return same_tree(a->left, b->left) && same_tree(a->right, b->right);
}

void write_node(const NodePtr& n, std::string& out) {
  switch (n->kind) {
    case ProgramNode::Kind::Leaf:
      out += to_string(n->constraint.type);
      out += '(';
      out += n->constraint.reference;
      if (n->constraint.direction != Direction::Null) {
        out += ", ";
        out += to_string(n->constraint.direction);
      }
      out += ')';
      return;
    case ProgramNode::Kind::And:
    case ProgramNode::Kind::Or:
      out += n->kind == ProgramNode::Kind::And ? "and(" : "or(";
      write_node(n->left, out);
      out += ", ";
      write_node(n->right, out);
      out += ')';
      return;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  PlacementProgram parse() {
    NodePtr root = node();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return PlacementProgram(std::move(root));
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }

  std::string_view ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected identifier");
    return text_.substr(start, pos_ - start);
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr node() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string_view name = ident();
    if (name == "and" || name == "or") {
      expect('(');
      std::vector<NodePtr> children;
      children.push_back(node());
      while (accept(',')) children.push_back(node());
      expect(')');
      if (children.size() != 2) {
        pos_ = start;
        fail(std::string(name) + " expects exactly 2 arguments, got " + std::to_string(children.size()));
      }
      return name == "and" ? ProgramNode::conj(children[0], children[1]) : ProgramNode::disj(children[0], children[1]);
    }
    const auto type = constraint_type_from_string(name);
    if (!type) {
      pos_ = start;
      fail("unknown constraint name '" + std::string(name) + "'");
    }
    expect('(');
    Constraint c;
    c.type = *type;
    c.reference = std::string(ident());
    if (accept(',')) {
      const std::size_t dpos = pos_;
      const std::string_view d = ident();
      const auto dir = direction_from_string(d);
      if (!dir) {
        pos_ = dpos;
        fail("unknown direction '" + std::string(d) + "'");
      }
      c.direction = *dir;
      if (accept(',')) fail(std::string(to_string(c.type)) + " takes at most 2 arguments");
    }
    expect(')');
    if (!is_well_formed(c)) {
      pos_ = start;
      fail(c.direction == Direction::Null ? std::string(to_string(c.type)) + " requires a direction"
                                          : std::string(to_string(c.type)) + " takes no direction");
    }
    return ProgramNode::leaf(std::move(c));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

NodePtr delete_leaf(const NodePtr& n, int& remaining) {
  if (n->kind == ProgramNode::Kind::Leaf) {
    return remaining-- == 0 ? nullptr : n;
  }
  NodePtr l = delete_leaf(n->left, remaining);
  if (!l) return n->right;
  if (remaining < 0) return l == n->left ? n : (n->kind == ProgramNode::Kind::And ? ProgramNode::conj(l, n->right) : ProgramNode::disj(l, n->right));
  NodePtr r = delete_leaf(n->right, remaining);
  if (!r) return l;
  if (l == n->left && r == n->right) return n;
  return n->kind == ProgramNode::Kind::And ? ProgramNode::conj(l, r) : ProgramNode::disj(l, r);
}

void collect_subtrees(const NodePtr& n, std::vector<PlacementProgram>& out) {
  if (!n) return;
  out.emplace_back(n);
  collect_subtrees(n->left, out);
  collect_subtrees(n->right, out);
}

NodePtr rename(const NodePtr& n, const std::vector<std::pair<std::string, std::string>>& mapping) {
  if (n->kind == ProgramNode::Kind::Leaf) {
    for (const auto& [from, to] : mapping) {
      if (n->constraint.reference == from) {
        Constraint c = n->constraint;
        c.reference = to;
        return ProgramNode::leaf(std::move(c));
      }
    }
    return n;
  }
  NodePtr l = rename(n->left, mapping);
  NodePtr r = rename(n->right, mapping);
  return n->kind == ProgramNode::Kind::And ? ProgramNode::conj(l, r) : ProgramNode::disj(l, r);
}

}  // namespace

int PlacementProgram::leaf_count() const { return static_cast<int>(leaves().size()); }
int PlacementProgram::node_count() const { return count_nodes(root_); }
int PlacementProgram::depth() const { return tree_depth(root_); }

std::vector<Constraint> PlacementProgram::leaves() const {
  std::vector<Constraint> out;
  collect_leaves(root_, out);
  return out;
}

std::vector<std::string> PlacementProgram::references() const {
  std::vector<std::string> refs;
  for (const auto& c : leaves()) {
    if (std::find(refs.begin(), refs.end(), c.reference) == refs.end()) refs.push_back(c.reference);
  }
  return refs;
}

bool PlacementProgram::operator==(const PlacementProgram& o) const { return same_tree(root_, o.root_); }

PlacementProgram parse_program(std::string_view text) { return Parser(text).parse(); }

std::string serialize_program(const PlacementProgram& p) {
  if (!p.valid()) throw Error(ErrorKind::Validation, "cannot serialize an empty program");
  std::string out;
  write_node(p.root(), out);
  return out;
}

void validate_program(const PlacementProgram& p, int max_depth) {
  if (!p.valid()) throw Error(ErrorKind::Validation, "empty program");
  for (const auto& c : p.leaves()) {
    if (!is_well_formed(c)) {
      throw Error(ErrorKind::Validation, std::string("illegal direction '") + to_string(c.direction) + "' for " +
                                             to_string(c.type));
    }
  }
  if (p.depth() > max_depth) {
    throw Error(ErrorKind::Validation, "program depth " + std::to_string(p.depth()) + " exceeds " + std::to_string(max_depth));
  }
}

void validate_against_scene(const PlacementProgram& p, const Scene& scene) {
  for (const auto& c : p.leaves()) {
    const ObjectInstance* ref = scene.find(c.reference);
    if (!ref) throw Error(ErrorKind::Execution, "unresolved reference '" + c.reference + "'");
    if (c.type == ConstraintType::ReachableByArm && !ref->holds_humans) {
      throw Error(ErrorKind::Execution, "reachable_by_arm reference '" + c.reference + "' does not hold humans");
    }
  }
}

PlacementProgram delete_constraint(const PlacementProgram& p, int leaf_index) {
  const int leaves = p.leaf_count();
  if (leaves < 2) throw Error(ErrorKind::Precondition, "cannot delete the only constraint of a program");
  if (leaf_index < 0 || leaf_index >= leaves) throw Error(ErrorKind::Precondition, "leaf index out of range");
  int remaining = leaf_index;
  return PlacementProgram(delete_leaf(p.root(), remaining));
}

PlacementProgram delete_random_constraint(const PlacementProgram& p, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, p.leaf_count() - 1);
  return delete_constraint(p, pick(rng));
}

PlacementProgram relax_randomly(const PlacementProgram& p, std::mt19937_64& rng) {
  const int leaves = p.leaf_count();
  if (leaves < 2) throw Error(ErrorKind::Precondition, "cannot relax a single-constraint program");
  const int deletions = std::uniform_int_distribution<int>(1, leaves - 1)(rng);
  PlacementProgram out = p;
  for (int d = 0; d < deletions; ++d) out = delete_random_constraint(out, rng);
  return out;
}

std::vector<PlacementProgram> enumerate_subtrees(const PlacementProgram& p) {
  std::vector<PlacementProgram> out;
  collect_subtrees(p.root(), out);
  return out;
}

PlacementProgram or_join(const std::vector<PlacementProgram>& programs) {
  if (programs.empty()) throw Error(ErrorKind::Precondition, "or_join needs at least one program");
  NodePtr root = programs.front().root();
  for (std::size_t i = 1; i < programs.size(); ++i) root = ProgramNode::disj(root, programs[i].root());
  return PlacementProgram(root);
}

PlacementProgram and_join(const std::vector<PlacementProgram>& programs) {
  if (programs.empty()) throw Error(ErrorKind::Precondition, "and_join needs at least one program");
  NodePtr root = programs.front().root();
  for (std::size_t i = 1; i < programs.size(); ++i) root = ProgramNode::conj(root, programs[i].root());
  return PlacementProgram(root);
}

PlacementProgram rename_references(const PlacementProgram& p,
                                   const std::vector<std::pair<std::string, std::string>>& mapping) {
  return PlacementProgram(rename(p.root(), mapping));
}

}  // namespace placeprog
