#include "spinml/tree.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace spinml {

TreeSpec::TreeSpec(const NodeDraft& root) {
  flatten(root, -1);
  sites_under_.resize(nodes_.size());
  for (int id : post_order()) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    auto& s = sites_under_[static_cast<std::size_t>(id)];
    if (n.is_leaf()) {
      s = {n.site};
    } else {
      for (int c : n.children) {
        const auto& cs = sites_under_[static_cast<std::size_t>(c)];
        s.insert(s.end(), cs.begin(), cs.end());
      }
    }
  }
  // leaf count; a missing or duplicated site shows up in validate()
  num_sites_ = static_cast<int>(sites_under_.front().size());
}

int TreeSpec::flatten(const NodeDraft& d, int parent) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(TreeNode{id, parent, {}, d.children.empty() ? d.site : -1, d.dim});
  for (const auto& c : d.children) {
    const int cid = flatten(c, id);
    nodes_[static_cast<std::size_t>(id)].children.push_back(cid);
  }
  return id;
}

int TreeSpec::leaf_of_site(int site) const {
  for (const auto& n : nodes_)
    if (n.is_leaf() && n.site == site) return n.id;
  return -1;
}

int TreeSpec::slot_in_parent(int child) const {
  const auto& p = node(node(child).parent);
  const auto it = std::find(p.children.begin(), p.children.end(), child);
  return static_cast<int>(it - p.children.begin());
}

int TreeSpec::layer_count() const {
  std::function<int(int)> depth = [&](int id) {
    int d = 0;
    for (int c : node(id).children) d = std::max(d, depth(c));
    return d + 1;
  };
  return depth(root());
}

std::vector<int> TreeSpec::post_order() const {
  std::vector<int> out;
  out.reserve(nodes_.size());
  std::function<void(int)> visit = [&](int id) {
    for (int c : node(id).children) visit(c);
    out.push_back(id);
  };
  if (!nodes_.empty()) visit(0);
  return out;
}

std::int64_t TreeSpec::child_configurations(int id) const {
  std::int64_t p = 1;
  for (int c : node(id).children) p *= node(c).dim;
  return p;
}

NodeDraft TreeSpec::to_draft() const {
  std::function<NodeDraft(int)> build = [&](int id) {
    const auto& n = node(id);
    if (n.is_leaf()) return NodeDraft{n.dim, n.site, {}};
    NodeDraft d{n.dim, -1, {}};
    for (int c : n.children) d.children.push_back(build(c));
    return d;
  };
  return build(root());
}

bool TreeSpec::operator==(const TreeSpec& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = other.nodes_[i];
    if (a.parent != b.parent || a.children != b.children || a.site != b.site || a.dim != b.dim) return false;
  }
  return true;
}

// ---------------------------------------------------------------- builders

namespace {

int product_dim(const std::vector<NodeDraft>& children) {
  std::int64_t p = 1;
  for (const auto& c : children) p *= c.dim;
  return static_cast<int>(std::min<std::int64_t>(p, 1 << 30));
}

// Layer index counted from the root's children (0) downwards.
int layer_dim(const std::vector<int>& spf, int layer, const std::vector<NodeDraft>& children) {
  if (layer < static_cast<int>(spf.size())) return spf[static_cast<std::size_t>(layer)];
  return product_dim(children);
}

bool is_power_of(int n, int base) {
  if (n < 1) return false;
  while (n % base == 0) n /= base;
  return n == 1;
}

}  // namespace

void require_valid(const TreeSpec& spec) {
  const auto diags = validate(spec);
  if (diags.empty()) return;
  std::string msg = "invalid tree:";
  for (const auto& d : diags) msg += "\n  " + d;
  throw TopologyError(msg);
}

TreeSpec binary_tree(int L, const std::vector<int>& spf_per_layer) {
  if (L < 2 || !is_power_of(L, 2))
    throw TopologyError("binary tree needs L = 2^k with k >= 1, got " + std::to_string(L));
  // depth of a node spanning `width` sites below the root: log2(L / width) - 1
  std::function<NodeDraft(int, int, int)> build = [&](int first, int width, int layer) {
    if (width == 1) return NodeDraft::leaf(first);
    std::vector<NodeDraft> kids{build(first, width / 2, layer + 1), build(first + width / 2, width / 2, layer + 1)};
    const int dim = layer < 0 ? 1 : layer_dim(spf_per_layer, layer, kids);
    return NodeDraft::internal(dim, std::move(kids));
  };
  TreeSpec spec(build(0, L, -1));
  require_valid(spec);
  return spec;
}

TreeSpec grid_tree_2d(int nx, int ny, const std::vector<int>& spf_per_layer) {
  if (nx < 3 || ny < 3 || !is_power_of(nx, 3) || !is_power_of(ny, 3))
    throw TopologyError("grid tree needs nx, ny in {3, 9, 27, ...}, got " + std::to_string(nx) + "x" +
                        std::to_string(ny));
  // blocks[y][x] on a shrinking grid; combine triplets alternately along x and y
  std::vector<std::vector<NodeDraft>> blocks(static_cast<std::size_t>(ny));
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) blocks[static_cast<std::size_t>(y)].push_back(NodeDraft::leaf(y * nx + x));

  // count grouping steps first so layer indices run from the root downwards
  int steps = 0;
  for (int w = nx, h = ny; w > 1 || h > 1; ++steps) {
    const bool along_x = (steps % 2 == 0 && w > 1) || h == 1;
    (along_x ? w : h) /= 3;
  }
  int step = 0;
  while (blocks.size() > 1 || blocks.front().size() > 1) {
    const int w = static_cast<int>(blocks.front().size());
    const int h = static_cast<int>(blocks.size());
    const bool along_x = (step % 2 == 0 && w > 1) || h == 1;
    const int layer = steps - 1 - step - 1;  // -1 marks the root
    std::vector<std::vector<NodeDraft>> next;
    if (along_x) {
      for (auto& row : blocks) {
        std::vector<NodeDraft> out;
        for (int x = 0; x < w; x += 3) {
          std::vector<NodeDraft> kids(std::make_move_iterator(row.begin() + x),
                                      std::make_move_iterator(row.begin() + x + 3));
          const int dim = layer < 0 ? 1 : layer_dim(spf_per_layer, layer, kids);
          out.push_back(NodeDraft::internal(dim, std::move(kids)));
        }
        next.push_back(std::move(out));
      }
    } else {
      for (int y = 0; y < h; y += 3) {
        std::vector<NodeDraft> out;
        for (int x = 0; x < w; ++x) {
          std::vector<NodeDraft> kids;
          for (int k = 0; k < 3; ++k) kids.push_back(std::move(blocks[static_cast<std::size_t>(y + k)][static_cast<std::size_t>(x)]));
          const int dim = layer < 0 ? 1 : layer_dim(spf_per_layer, layer, kids);
          out.push_back(NodeDraft::internal(dim, std::move(kids)));
        }
        next.push_back(std::move(out));
      }
    }
    blocks = std::move(next);
    ++step;
  }
  TreeSpec spec(blocks.front().front());
  require_valid(spec);
  return spec;
}

TreeSpec mode_combination_tree(int L, const std::vector<std::vector<int>>& groups, const std::vector<int>& m) {
  if (groups.empty()) throw TopologyError("mode combination needs at least one group");
  if (m.size() != groups.size()) throw TopologyError("one SPF count per group is required");
  int next = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw TopologyError("empty group in mode combination");
    for (int s : g) {
      if (s != next) throw TopologyError("groups must be contiguous and cover sites in order (site " +
                                         std::to_string(s + 1) + ")");
      ++next;
    }
  }
  if (next != L) throw TopologyError("groups cover " + std::to_string(next) + " of " + std::to_string(L) + " sites");

  std::vector<NodeDraft> top;
  if (groups.size() == 1) {
    for (int s : groups.front()) top.push_back(NodeDraft::leaf(s));
  } else {
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const auto& g = groups[k];
      if (g.size() == 1) {
        if (m[k] != 2) throw TopologyError("singleton group needs m = 2 (it is the primitive basis)");
        top.push_back(NodeDraft::leaf(g.front()));
        continue;
      }
      std::vector<NodeDraft> leaves;
      for (int s : g) leaves.push_back(NodeDraft::leaf(s));
      top.push_back(NodeDraft::internal(m[k], std::move(leaves)));
    }
  }
  TreeSpec spec(NodeDraft::internal(1, std::move(top)));
  require_valid(spec);
  return spec;
}

std::vector<std::string> validate(const TreeSpec& spec) {
  std::vector<std::string> out;
  if (spec.size() == 0) return {"tree is empty"};
  const auto& root = spec.node(spec.root());
  if (root.is_leaf()) out.push_back("root is a leaf");
  if (root.dim != 1) out.push_back("root carries " + std::to_string(root.dim) + " functions, expected 1");

  std::vector<int> seen;
  for (const auto& n : spec.nodes()) {
    const std::string where = "node " + std::to_string(n.id);
    if (n.is_leaf()) {
      if (n.dim != 2) out.push_back(where + " (site " + std::to_string(n.site + 1) + "): leaf dim " +
                                    std::to_string(n.dim) + ", expected 2");
      seen.push_back(n.site);
      continue;
    }
    if (n.children.empty()) {
      out.push_back(where + ": internal node without children or site");
      continue;
    }
    if (n.children.size() < 2) out.push_back(where + ": internal node has a single child");
    if (n.dim < 1) out.push_back(where + ": dim " + std::to_string(n.dim) + " < 1");
    const auto cap = spec.child_configurations(n.id);
    if (n.dim > cap)
      out.push_back(where + ": overcomplete, dim " + std::to_string(n.dim) + " exceeds " + std::to_string(cap) +
                    " child configurations");
  }
  std::sort(seen.begin(), seen.end());
  for (auto it = seen.begin(); (it = std::adjacent_find(it, seen.end())) != seen.end();) {
    out.push_back("duplicate site " + std::to_string(*it + 1));
    it = std::upper_bound(it, seen.end(), *it);
  }
  const int L = static_cast<int>(seen.size());
  for (int s : seen)
    if (s < 0 || s >= L) out.push_back("site " + std::to_string(s + 1) + " out of range [1, " + std::to_string(L) + "]");
  for (int s = 0; s < L; ++s)
    if (!std::binary_search(seen.begin(), seen.end(), s)) out.push_back("missing site " + std::to_string(s + 1));
  return out;
}

// ---------------------------------------------------------------- documents

namespace {

using nlohmann::json;

json node_to_json(const TreeSpec& spec, int id) {
  const auto& n = spec.node(id);
  if (n.is_leaf()) return json{{"site", n.site + 1}};
  json kids = json::array();
  for (int c : n.children) kids.push_back(node_to_json(spec, c));
  return json{{"m", n.dim}, {"children", kids}};
}

NodeDraft node_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": node must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "m" && key != "children" && key != "site")
      throw ParseError(where + ": unknown field '" + key + "'");
  if (j.contains("site")) {
    if (j.contains("children") || j.contains("m"))
      throw ParseError(where + ": leaf nodes carry only 'site'");
    if (!j["site"].is_number_integer()) throw ParseError(where + "/site: expected an integer");
    return NodeDraft::leaf(j["site"].get<int>() - 1);
  }
  if (!j.contains("m")) throw ParseError(where + ": internal node needs 'm'");
  if (!j.contains("children")) throw ParseError(where + ": internal node needs 'children'");
  if (!j["m"].is_number_integer()) throw ParseError(where + "/m: expected an integer");
  if (!j["children"].is_array()) throw ParseError(where + "/children: expected an array");
  NodeDraft d{j["m"].get<int>(), -1, {}};
  for (std::size_t k = 0; k < j["children"].size(); ++k)
    d.children.push_back(node_from_json(j["children"][k], where + "/children/" + std::to_string(k)));
  if (d.children.empty()) throw ParseError(where + "/children: empty");
  return d;
}

}  // namespace

nlohmann::json serialize_tree(const TreeSpec& spec) { return node_to_json(spec, spec.root()); }

TreeSpec parse_tree(const nlohmann::json& doc) { return TreeSpec(node_from_json(doc, "")); }

std::uint64_t tree_hash(const TreeSpec& spec) {
  const std::string s = serialize_tree(spec).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace spinml
