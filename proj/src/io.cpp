#include "tvslab/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tvslab/constants.hpp"
#include "tvslab/errors.hpp"

namespace tvslab {

namespace {

static_assert(std::endian::native == std::endian::little, "binary export assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DomainError("read_sample: truncated file");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DomainError("cannot write " + path.string());
  return out;
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

const char* label_color(double label, double a, double b) {
  if (std::abs(label + a) < 1e-9) return "#3b6fb6";
  if (std::abs(label - b) < 1e-9) return "#c8553d";
  return label < 0.0 ? "#8fb3de" : "#e8a598";
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, true);
  out << text;
  if (!out) throw DomainError("write failed: " + path.string());
}

void write_sample(const FieldSample& sample, const std::filesystem::path& path) {
  auto out = open_out(path, true);
  out.write("TVS1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sample.domain->radius()));
  put<std::uint64_t>(out, sample.values.size());
  for (double v : sample.values) put<double>(out, v);
  if (!out) throw DomainError("write failed: " + path.string());
  Json meta;
  meta["radius"] = sample.domain->radius();
  meta["vertices"] = sample.values.size();
  meta["seed"] = sample.seed;
  meta["method"] = to_string(sample.method);
  meta["lambda"] = kLambda;
  write_text(sidecar(path), meta.dump(2) + "\n");
}

FieldSample read_sample(const std::filesystem::path& path, const DomainPtr& domain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TVS1", 4) != 0) throw DomainError("read_sample: bad magic");
  const auto radius = get<std::uint32_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (static_cast<int>(radius) != domain->radius() || count != static_cast<std::uint64_t>(domain->vertex_count())) {
    throw DomainError("read_sample: domain mismatch");
  }
  FieldSample s;
  s.domain = domain;
  s.values.resize(count);
  for (auto& v : s.values) v = get<double>(in);
  std::ifstream meta_in(sidecar(path));
  if (meta_in) {
    const Json meta = Json::parse(meta_in);
    s.seed = meta.value("seed", std::uint64_t{0});
    const std::string m = meta.value("method", std::string("direct"));
    s.method = m == "iterative" ? SamplingMethod::kIterative : SamplingMethod::kDirect;
  }
  return s;
}

std::string pack_bits(std::span<const std::uint8_t> flags) {
  std::string bytes((flags.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) bytes[i / 8] = static_cast<char>(static_cast<unsigned char>(bytes[i / 8]) | (1u << (i % 8)));
  }
  return bytes;
}

std::vector<std::uint8_t> unpack_bits(const std::string& bytes, std::size_t count) {
  if (bytes.size() * 8 < count) throw DomainError("unpack_bits: not enough bytes");
  std::vector<std::uint8_t> flags(count);
  for (std::size_t i = 0; i < count; ++i) flags[i] = (static_cast<unsigned char>(bytes[i / 8]) >> (i % 8)) & 1u;
  return flags;
}

void write_edge_marks(const EdgeMarks& marks, const std::filesystem::path& path) {
  write_text(path, pack_bits(marks.stays_in_corridor));
  Json meta;
  meta["a"] = marks.a;
  meta["b"] = marks.b;
  meta["seed"] = marks.seed;
  meta["edges"] = marks.stays_in_corridor.size();
  write_text(sidecar(path), meta.dump(2) + "\n");
}

Json tvs_json(const TwoValuedSet& tvs) {
  Json j;
  j["a"] = tvs.a;
  j["b"] = tvs.b;
  j["radius"] = tvs.domain->radius();
  j["interior_vertices"] = tvs.in_cluster.size();
  j["cluster_size"] = tvs.cluster_size();
  j["components"] = tvs.components.size();
  j["mixed"] = tvs.mixed_count();
  j["subcritical"] = tvs.subcritical;
  Json labels = Json::array();
  for (const auto& c : tvs.components) labels.push_back(c.label);
  j["labels"] = std::move(labels);
  return j;
}

void write_tvs(const TwoValuedSet& tvs, const std::filesystem::path& path) {
  write_text(path, pack_bits(tvs.in_cluster));
  write_text(sidecar(path), tvs_json(tvs).dump(2) + "\n");
}

Json to_json(const TestReport& r) {
  Json j;
  j["method"] = r.method;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["n"] = r.n;
  return j;
}

Json to_json(const TrendReport& r) {
  Json j = to_json(r.test);
  j["means"] = r.means;
  j["std_errors"] = r.std_errors;
  j["monotone"] = r.monotone;
  return j;
}

Json to_json(const DimensionFit& f) {
  Json j;
  j["box_sizes"] = f.box_sizes;
  j["counts"] = f.counts;
  j["slope"] = f.slope;
  j["r2"] = f.r2;
  j["window"] = {f.min_box, f.max_box};
  return j;
}

Json to_json(const Interval& i) { return Json::array({i.low, i.high}); }

Json loop_graph_json(const LoopGraph& lg) {
  Json j;
  j["a"] = lg.a;
  j["b"] = lg.b;
  j["min_side_len"] = lg.min_side_len;
  Json loops = Json::array();
  const auto side = lg.adjacency(true);
  const auto point = lg.adjacency(false);
  for (std::size_t i = 0; i < lg.loops.size(); ++i) {
    const Loop& l = lg.loops[i];
    Json o;
    o["label"] = l.label;
    o["mixed"] = l.mixed;
    o["touches_boundary"] = l.touches_boundary;
    o["diameter"] = l.diameter;
    o["side"] = side[i];
    o["point"] = point[i];
    loops.push_back(std::move(o));
  }
  j["loops"] = std::move(loops);
  return j;
}

Json br_json(const BrSet& br) {
  Json j;
  j["r"] = br.r;
  j["stage_cap"] = br.stage_cap;
  j["stages_used"] = br.stages_used;
  j["cluster_after_stage"] = br.cluster_after_stage;
  Json comps = Json::array();
  for (const auto& c : br.set.components) {
    comps.push_back({{"stage", c.stage}, {"label", c.label}, {"truncated", c.truncated}, {"mixed", c.mixed},
                     {"size", c.vertices.size()}});
  }
  j["components"] = std::move(comps);
  return j;
}

std::string svg_string(const LoopGraph& lg) {
  const double r = lg.domain ? lg.domain->radius() + 1.5 : 1.0;
  std::ostringstream s;
  s.precision(6);
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << -r << ' ' << -r << ' ' << 2 * r << ' ' << 2 * r
    << "\" width=\"800\" height=\"800\">\n"
    << "<circle cx=\"0\" cy=\"0\" r=\"" << r - 1.0 << "\" fill=\"#f4f1ea\" stroke=\"#222\" stroke-width=\"0.5\"/>\n";
  for (const Loop& l : lg.loops) {
    if (l.outline.empty()) continue;
    s << "<polygon points=\"";
    for (std::size_t k = 0; k < l.outline.size(); ++k) {
      // y flipped so the picture matches lattice orientation
      s << (k ? " " : "") << l.outline[k].first << ',' << -l.outline[k].second;
    }
    s << "\" fill=\"" << (l.mixed ? "#bbbbbb" : label_color(l.label, lg.a, lg.b)) << '"';
    if (l.touches_boundary) s << " stroke=\"#000\" stroke-width=\"0.4\"";
    s << "/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void render_svg(const LoopGraph& lg, const std::filesystem::path& path) { write_text(path, svg_string(lg)); }

}  // namespace tvslab
