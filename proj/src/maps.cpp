#include "gx/maps.hpp"

#include <map>
#include <sstream>

#include "gx/common.hpp"

namespace gx {

namespace {

struct Builder {
  int h, w;
  std::vector<std::string> rows;

  Builder(int h_, int w_) : h(h_), w(w_), rows(h_, std::string(w_, '.')) {
    hline(0, 0, w - 1);
    hline(h - 1, 0, w - 1);
    vline(0, 0, h - 1);
    vline(w - 1, 0, h - 1);
  }

  void hline(int r, int c0, int c1, char ch = '#') {
    for (int c = c0; c <= c1; ++c) rows[r][c] = ch;
  }
  void vline(int c, int r0, int r1, char ch = '#') {
    for (int r = r0; r <= r1; ++r) rows[r][c] = ch;
  }
  void rect(int r0, int c0, int r1, int c1, char ch = '#') {
    for (int r = r0; r <= r1; ++r) hline(r, c0, c1, ch);
  }

  std::string text() const {
    std::ostringstream out;
    out << "GRIDMAP v1\n" << h << " " << w << "\n";
    for (const auto& row : rows) out << row << "\n";
    return out.str();
  }
};

// ring corridor of width 4 around a central block
std::string map_level1() {
  Builder b(20, 20);
  b.rect(5, 5, 14, 14);
  return b.text();
}

// three zones chained through doorways
std::string map_level2() {
  Builder b(24, 24);
  b.rect(7, 1, 9, 22);
  b.rect(7, 4, 9, 5, '.');
  b.rect(7, 18, 9, 19, '.');
  b.rect(14, 1, 16, 22);
  b.rect(14, 11, 16, 12, '.');
  return b.text();
}

// four rooms with doorways, two of them subdivided
std::string map_level3() {
  Builder b(30, 30);
  b.hline(15, 1, 28);
  b.vline(15, 1, 28);
  b.hline(15, 5, 6, '.');
  b.hline(15, 23, 24, '.');
  b.vline(15, 5, 6, '.');
  b.vline(15, 23, 24, '.');
  b.hline(7, 1, 9);
  b.vline(22, 16, 24);
  return b.text();
}

// serpentine corridors, alternating left/right openings
std::string map_level4() {
  Builder b(30, 30);
  for (int i = 0; i < 6; ++i) {
    int r = 4 + 4 * i;
    b.hline(r, 1, 28);
    if (i % 2 == 0)
      b.hline(r, 26, 28, '.');
    else
      b.hline(r, 1, 3, '.');
  }
  return b.text();
}

// one quadrant of each flavor: loop, rooms, winding corridors, serpentine
std::string map_level5() {
  Builder b(40, 40);
  b.hline(20, 1, 38);
  b.vline(20, 1, 38);
  b.hline(20, 5, 6, '.');
  b.hline(20, 33, 34, '.');
  b.vline(20, 10, 11, '.');
  b.vline(20, 28, 29, '.');
  b.rect(6, 6, 14, 14);
  b.hline(10, 21, 38);
  b.hline(10, 36, 37, '.');
  b.vline(30, 1, 9);
  b.vline(30, 4, 5, '.');
  b.vline(7, 21, 33);
  b.vline(13, 26, 38);
  b.hline(26, 21, 34);
  b.hline(32, 25, 38);
  return b.text();
}

std::string map_test1() {
  Builder b(16, 16);
  b.rect(6, 6, 9, 9);
  return b.text();
}

std::string map_test2() {
  Builder b(22, 28);
  b.vline(14, 1, 20);
  b.vline(14, 9, 10, '.');
  b.rect(5, 20, 8, 22);
  return b.text();
}

std::string map_test3() {
  Builder b(12, 10);
  b.rect(4, 3, 7, 6);
  return b.text();
}

std::string map_test4() {
  Builder b(9, 9);
  b.vline(4, 1, 5);
  return b.text();
}

std::string map_test5() {
  Builder b(18, 26);
  b.hline(5, 1, 24);
  b.hline(5, 21, 24, '.');
  b.hline(11, 1, 24);
  b.hline(11, 1, 4, '.');
  return b.text();
}

std::string map_open(int n) {
  Builder b(n, n);
  return b.text();
}

const std::map<std::string, std::string>& registry() {
  static const std::map<std::string, std::string> maps = {
      {"level-1", map_level1()}, {"level-2", map_level2()}, {"level-3", map_level3()},
      {"level-4", map_level4()}, {"level-5", map_level5()}, {"test-1", map_test1()},
      {"test-2", map_test2()},   {"test-3", map_test3()},   {"test-4", map_test4()},
      {"test-5", map_test5()},   {"open-5", map_open(5)},   {"open-7", map_open(7)},
  };
  return maps;
}

}  // namespace

const std::vector<std::string>& builtin_map_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, _] : registry()) v.push_back(id);
    return v;
  }();
  return ids;
}

bool is_builtin_map(const std::string& id) { return registry().count(id) != 0; }

std::string builtin_map_text(const std::string& id) {
  auto it = registry().find(id);
  if (it == registry().end()) throw UsageError("unknown builtin map '" + id + "'");
  return it->second;
}

GroundTruthMap load_map(const std::string& id_or_path) {
  if (is_builtin_map(id_or_path)) return parse_map(builtin_map_text(id_or_path));
  return load_map_file(id_or_path);
}

}  // namespace gx
