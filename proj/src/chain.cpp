#include "dagreg/chain.hpp"

#include <cstring>
#include <fstream>
#include <type_traits>

#include "dagreg/error.hpp"
#include "dagreg/io.hpp"

namespace dagreg {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'G', 'R', 'C', 'H', '0', '1'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw Error(ErrorKind::Io, "truncated chain file " + path_.string());
    return v;
  }

 private:
  std::ifstream& in_;
  const std::filesystem::path& path_;
};

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

const char* to_string(ChainKind kind) {
  switch (kind) {
    case ChainKind::Ess: return "ess";
    case ChainKind::TesStep1: return "tes-step1";
    case ChainKind::TesStep2: return "tes-step2";
  }
  return "unknown";
}

ChainKind chain_kind_from_string(const std::string& s) {
  if (s == "ess") return ChainKind::Ess;
  if (s == "tes-step1") return ChainKind::TesStep1;
  if (s == "tes-step2") return ChainKind::TesStep2;
  throw Error(ErrorKind::Validation, "unknown chain kind '" + s + "'");
}

void write_chain(const ChainRecord& chain, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  Writer w(out);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(chain.kind));
  w.put<std::uint64_t>(chain.p);
  w.put<std::uint64_t>(chain.q);
  w.put<std::uint8_t>(chain.has_coef_values ? 1 : 0);
  w.put<std::uint64_t>(chain.seed);
  w.put<std::uint64_t>(chain.draws.size());
  for (const auto& draw : chain.draws) {
    w.put<std::uint64_t>(draw.coef.size());
    for (const auto& c : draw.coef) {
      w.put(c.row);
      w.put(c.col);
      w.put(c.value);
    }
    w.put<std::uint8_t>(draw.dag ? 1 : 0);
    if (draw.dag) {
      for (std::size_t j = 0; j < draw.dag->q(); ++j) {
        const auto& pa = draw.dag->parents(j);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(pa.size()));
        for (auto v : pa) w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
      }
    }
    w.put<std::uint64_t>(draw.l_values.size());
    for (double v : draw.l_values) w.put(v);
    w.put<std::uint64_t>(draw.d.size());
    for (double v : draw.d) w.put(v);
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());

  write_json({{"kind", to_string(chain.kind)},
              {"p", chain.p},
              {"q", chain.q},
              {"draws", chain.draws.size()},
              {"has_coef_values", chain.has_coef_values},
              {"seed", chain.seed},
              {"config", chain.config},
              {"version", kArtifactVersion}},
             sidecar(path));
}

ChainRecord read_chain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::Validation, path.string() + " is not a chain file");
  }
  Reader r(in, path);
  ChainRecord chain;
  const auto kind = r.get<std::uint32_t>();
  if (kind > static_cast<std::uint32_t>(ChainKind::TesStep2)) {
    throw Error(ErrorKind::Validation, "bad chain kind in " + path.string());
  }
  chain.kind = static_cast<ChainKind>(kind);
  chain.p = r.get<std::uint64_t>();
  chain.q = r.get<std::uint64_t>();
  chain.has_coef_values = r.get<std::uint8_t>() != 0;
  chain.seed = r.get<std::uint64_t>();
  const auto n_draws = r.get<std::uint64_t>();
  chain.draws.resize(n_draws);
  for (auto& draw : chain.draws) {
    draw.coef.resize(r.get<std::uint64_t>());
    for (auto& c : draw.coef) {
      c.row = r.get<std::uint32_t>();
      c.col = r.get<std::uint32_t>();
      c.value = r.get<double>();
    }
    if (r.get<std::uint8_t>() != 0) {
      std::vector<std::vector<std::size_t>> parents(chain.q);
      for (auto& pa : parents) {
        pa.resize(r.get<std::uint32_t>());
        for (auto& v : pa) v = r.get<std::uint32_t>();
      }
      draw.dag = OrderedDag(chain.q, std::move(parents));
    }
    draw.l_values.resize(r.get<std::uint64_t>());
    for (auto& v : draw.l_values) v = r.get<double>();
    draw.d.resize(r.get<std::uint64_t>());
    for (auto& v : draw.d) v = r.get<double>();
  }
  const auto meta = sidecar(path);
  if (std::filesystem::exists(meta)) chain.config = read_json(meta).value("config", nlohmann::json::object());
  return chain;
}

void export_chain_csv(const ChainRecord& chain, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "draw,field,row,col,value\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    const auto& draw = chain.draws[t];
    for (const auto& c : draw.coef) {
      out << t + 1 << ",gamma," << c.row + 1 << ',' << c.col + 1 << ",1\n";
      if (chain.has_coef_values) {
        out << t + 1 << ",B," << c.row + 1 << ',' << c.col + 1 << ',' << num(c.value) << '\n';
      }
    }
    if (draw.dag) {
      std::size_t pos = 0;
      for (std::size_t j = 0; j < draw.dag->q(); ++j) {
        for (auto i : draw.dag->parents(j)) {
          out << t + 1 << ",edge," << i + 1 << ',' << j + 1 << ",1\n";
          if (pos < draw.l_values.size()) {
            out << t + 1 << ",L," << i + 1 << ',' << j + 1 << ',' << num(draw.l_values[pos])
                << '\n';
          }
          ++pos;
        }
      }
    }
    for (std::size_t j = 0; j < draw.d.size(); ++j) {
      out << t + 1 << ",d," << j + 1 << ',' << j + 1 << ',' << num(draw.d[j]) << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace dagreg
