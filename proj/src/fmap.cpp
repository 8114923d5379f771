#include "specmatch/fmap.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace specmatch {

void save_fmap_csv(const std::string& path, const FunctionalMap& fmap) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "# source=" << fmap.source << " target=" << fmap.target << "\n";
    out.precision(17);
    for (int i = 0; i < fmap.C.rows(); ++i) {
      for (int j = 0; j < fmap.C.cols(); ++j) {
        if (j) out << ',';
        out << fmap.C(i, j);
      }
      out << '\n';
    }
  });
}

FunctionalMap load_fmap_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open functional map file '" + path + "'");
  FunctionalMap fmap;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        if (tok.rfind("source=", 0) == 0) fmap.source = tok.substr(7);
        if (tok.rfind("target=", 0) == 0) fmap.target = tok.substr(7);
      }
      continue;
    }
    rows.emplace_back();
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str())
        throw_data(path + ":" + std::to_string(line_no) + ": non-numeric token '" + tok + "'");
      rows.back().push_back(v);
    }
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw_data(path + ":" + std::to_string(line_no) + ": ragged row");
  }
  if (rows.empty()) throw_data("functional map file '" + path + "' has no data rows");
  fmap.C.resize(long(rows.size()), long(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) fmap.C(long(i), long(j)) = rows[i][j];
  return fmap;
}

}  // namespace specmatch
