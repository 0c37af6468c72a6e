#include <cctype>
#include <map>

#include "retro/error.hpp"
#include "retro/molgraph.hpp"

namespace retro {

namespace {

struct PendingBond {
  bool present = false;
  BondOrder order = BondOrder::kSingle;
  char direction = 0;
};

struct RingOpening {
  int atom;
  PendingBond bond;
  std::size_t stereo_slot;
};

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class SmilesReader {
 public:
  SmilesReader(std::string_view text, bool pattern) : text_(text), pattern_(pattern) {}

  PatternGraph parse() {
    if (text_.empty()) fail("empty SMILES");
    int prev = -1;
    PendingBond pending;
    std::vector<int> branches;
    bool expect_atom = true;

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') {
        if (prev < 0 || expect_atom) fail("branch without preceding atom");
        branches.push_back(prev);
        ++pos_;
        expect_atom = true;
      } else if (c == ')') {
        if (branches.empty()) fail("unbalanced ')'");
        if (expect_atom) fail("empty branch or dangling bond");
        prev = branches.back();
        branches.pop_back();
        ++pos_;
      } else if (c == '.') {
        if (expect_atom) fail("misplaced '.'");
        if (!branches.empty()) fail("'.' inside a branch");
        prev = -1;
        ++pos_;
        expect_atom = true;
      } else if (is_bond_char(c)) {
        if (pending.present || prev < 0) fail("misplaced bond symbol");
        pending = read_bond();
        expect_atom = true;
      } else if (is_digit(c) || c == '%') {
        if (prev < 0 || (expect_atom && !pending.present)) fail("ring closure without atom");
        ring_closure(prev, read_ring_number(), pending);
        pending = {};
        expect_atom = false;
      } else {
        const auto [atom, bracket] = read_atom();
        if (prev >= 0) {
          connect(prev, atom, pending);
          out_.graph.mutable_atom(atom).stereo_neighbors.push_back(prev);
        }
        Atom& a = out_.graph.mutable_atom(atom);
        if (bracket && !a.chirality.empty() && a.hydrogens == 1) a.stereo_neighbors.push_back(-1);
        pending = {};
        prev = atom;
        expect_atom = false;
      }
    }
    if (!branches.empty()) fail("unbalanced '('");
    if (expect_atom) fail("SMILES ends unexpectedly");
    if (!rings_.empty()) fail("unclosed ring " + std::to_string(rings_.begin()->first));

    for (std::size_t i = 0; i < out_.graph.atom_count(); ++i) {
      Atom& a = out_.graph.mutable_atom(static_cast<int>(i));
      if (!bracket_[i] && !pattern_) {
        a.hydrogens = default_hydrogens(a, out_.graph.bond_valence_sum(static_cast<int>(i)));
      }
      if (a.chirality.empty()) a.stereo_neighbors.clear();
    }
    out_.graph.update_derived();
    if (!pattern_) check_valence(out_.graph);
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what + " at position " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  static bool is_bond_char(char c) {
    return c == '-' || c == '=' || c == '#' || c == '$' || c == ':' || c == '/' || c == '\\';
  }

  PendingBond read_bond() {
    PendingBond b;
    b.present = true;
    switch (text_[pos_++]) {
      case '-': b.order = BondOrder::kSingle; break;
      case '=': b.order = BondOrder::kDouble; break;
      case '#': b.order = BondOrder::kTriple; break;
      case ':': b.order = BondOrder::kAromatic; break;
      case '/': b.direction = '/'; break;
      case '\\': b.direction = '\\'; break;
      default: fail("unsupported bond symbol");
    }
    return b;
  }

  int read_ring_number() {
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !is_digit(text_[pos_ + 1]) || !is_digit(text_[pos_ + 2])) {
        fail("bad %nn ring number");
      }
      const int n = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
      return n;
    }
    return text_[pos_++] - '0';
  }

  BondOrder default_order(int a, int b) const {
    const auto& g = out_.graph;
    return g.atom(a).aromatic && g.atom(b).aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
  }

  void add_bond_checked(int a, int b, BondOrder order, char direction) {
    if (a == b) fail("ring closure to the same atom");
    if (out_.graph.bond_between(a, b)) fail("duplicate bond");
    out_.graph.add_bond(a, b, order, direction);
  }

  void connect(int prev, int atom, const PendingBond& pending) {
    const BondOrder order =
        pending.present && pending.direction == 0 ? pending.order : default_order(prev, atom);
    add_bond_checked(prev, atom, order, pending.direction);
    out_.graph.mutable_atom(prev).stereo_neighbors.push_back(atom);
  }

  void ring_closure(int atom, int number, const PendingBond& pending) {
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      auto& stereo = out_.graph.mutable_atom(atom).stereo_neighbors;
      stereo.push_back(-2);  // filled when the ring closes
      rings_[number] = RingOpening{atom, pending, stereo.size() - 1};
      return;
    }
    const RingOpening open = it->second;
    rings_.erase(it);
    if (open.bond.present && pending.present && open.bond.direction == 0 && pending.direction == 0 &&
        open.bond.order != pending.order) {
      fail("conflicting ring bond orders");
    }
    BondOrder order = default_order(open.atom, atom);
    char direction = 0;
    if (open.bond.present) {
      if (open.bond.direction == 0) order = open.bond.order;
      direction = open.bond.direction;
    } else if (pending.present) {
      if (pending.direction == 0) order = pending.order;
      // A direction written at the closing digit reads from the closing atom.
      if (pending.direction != 0) direction = pending.direction == '/' ? '\\' : '/';
    }
    add_bond_checked(open.atom, atom, order, direction);
    out_.graph.mutable_atom(open.atom).stereo_neighbors[open.stereo_slot] = atom;
    out_.graph.mutable_atom(atom).stereo_neighbors.push_back(open.atom);
  }

  int read_number() {
    int n = 0;
    bool any = false;
    while (pos_ < text_.size() && is_digit(text_[pos_])) {
      n = n * 10 + (text_[pos_++] - '0');
      any = true;
    }
    return any ? n : -1;
  }

  std::pair<int, bool> read_atom() {
    Atom atom;
    AtomQuery query;
    const bool bracket = text_[pos_] == '[';
    if (bracket) {
      read_bracket_atom(atom, query);
    } else {
      read_organic_atom(atom);
    }
    const int index = out_.graph.add_atom(std::move(atom));
    bracket_.push_back(bracket);
    out_.queries.push_back(query);
    return {index, bracket};
  }

  void read_organic_atom(Atom& atom) {
    const char c = text_[pos_];
    std::string symbol;
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      symbol = "Cl";
      pos_ += 2;
    } else if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      symbol = "Br";
      pos_ += 2;
    } else if (c == '*') {
      symbol = "*";
      ++pos_;
    } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
      symbol = std::string(1, c);
      ++pos_;
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      symbol = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
      ++pos_;
    } else {
      fail(std::string("unknown atom symbol '") + c + "'");
    }
    atom.symbol = symbol;
    atom.atomic_number = *atomic_number_for(symbol);
  }

  void read_bracket_atom(Atom& atom, AtomQuery& query) {
    ++pos_;  // '['
    if (const int iso = read_number(); iso >= 0) atom.isotope = iso;
    if (pos_ >= text_.size()) fail("unterminated bracket atom");
    std::string symbol;
    for (std::string_view s : {std::string_view("se"), std::string_view("as"), std::string_view("te")}) {
      if (text_.substr(pos_, 2) == s) {
        symbol = {static_cast<char>(std::toupper(s[0])), s[1]};
        atom.aromatic = true;
        pos_ += 2;
        break;
      }
    }
    if (symbol.empty()) {
      const char c = text_[pos_];
      if (c == '*') {
        symbol = "*";
        ++pos_;
      } else if (std::isupper(static_cast<unsigned char>(c))) {
        if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
          const std::string two = {c, text_[pos_ + 1]};
          if (atomic_number_for(two)) {
            symbol = two;
            pos_ += 2;
          }
        }
        if (symbol.empty()) {
          symbol = std::string(1, c);
          ++pos_;
        }
      } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
        symbol = std::string(1, static_cast<char>(std::toupper(c)));
        atom.aromatic = true;
        ++pos_;
      } else {
        fail("bad bracket atom");
      }
    }
    const auto z = atomic_number_for(symbol);
    if (!z) fail("unknown element '" + symbol + "'");
    atom.symbol = symbol;
    atom.atomic_number = *z;

    if (pos_ < text_.size() && text_[pos_] == '@') {
      ++pos_;
      atom.chirality = "@";
      if (pos_ < text_.size() && text_[pos_] == '@') {
        ++pos_;
        atom.chirality = "@@";
      }
    }
    atom.hydrogens = 0;
    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      const int h = read_number();
      atom.hydrogens = h < 0 ? 1 : h;
      query.match_hydrogens = true;
    }
    read_charge(atom);
    while (pos_ < text_.size() && text_[pos_] == ';') {
      if (!pattern_) fail("';' primitives are only allowed in patterns");
      ++pos_;
      if (pos_ >= text_.size()) fail("unterminated primitive");
      const char p = text_[pos_];
      if (p == 'H') {
        ++pos_;
        const int h = read_number();
        if (h < 0) fail("H primitive needs a count");
        atom.hydrogens = h;
        query.match_hydrogens = true;
      } else if (p == 'D') {
        ++pos_;
        const int d = read_number();
        if (d < 0) fail("D primitive needs a count");
        query.degree = d;
      } else if (p == '+' || p == '-') {
        read_charge(atom);
      } else {
        fail("unknown primitive");
      }
    }
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      const int map = read_number();
      if (map < 0) fail("atom class needs a number");
      atom.atom_map = map;
    }
    if (pos_ >= text_.size() || text_[pos_] != ']') fail("unterminated bracket atom");
    ++pos_;
  }

  void read_charge(Atom& atom) {
    if (pos_ >= text_.size() || (text_[pos_] != '+' && text_[pos_] != '-')) return;
    const char sign = text_[pos_++];
    int magnitude = 1;
    if (const int n = read_number(); n >= 0) {
      magnitude = n;
    } else {
      while (pos_ < text_.size() && text_[pos_] == sign) {
        ++magnitude;
        ++pos_;
      }
    }
    atom.charge = sign == '+' ? magnitude : -magnitude;
  }

  std::string_view text_;
  bool pattern_;
  std::size_t pos_ = 0;
  PatternGraph out_;
  std::vector<bool> bracket_;
  std::map<int, RingOpening> rings_;
};

}  // namespace

MolecularGraph parse_smiles(std::string_view text) {
  return SmilesReader(text, false).parse().graph;
}

PatternGraph parse_pattern(std::string_view text) {
  return SmilesReader(text, true).parse();
}

}  // namespace retro
