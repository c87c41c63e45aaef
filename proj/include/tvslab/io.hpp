#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tvslab/br.hpp"
#include "tvslab/bridge.hpp"
#include "tvslab/field.hpp"
#include "tvslab/loops.hpp"
#include "tvslab/stats.hpp"
#include "tvslab/tvs.hpp"

namespace tvslab {

using Json = nlohmann::ordered_json;

// "TVS1", little-endian: u32 radius, u64 vertex count, f64 values in vertex
// order. The sidecar `<path>.json` holds seed, method and lambda.
void write_sample(const FieldSample& sample, const std::filesystem::path& path);
FieldSample read_sample(const std::filesystem::path& path, const DomainPtr& domain);

// Packed bits, least significant first.
std::string pack_bits(std::span<const std::uint8_t> flags);
std::vector<std::uint8_t> unpack_bits(const std::string& bytes, std::size_t count);

void write_edge_marks(const EdgeMarks& marks, const std::filesystem::path& path);
void write_tvs(const TwoValuedSet& tvs, const std::filesystem::path& path);

Json to_json(const TestReport& r);
Json to_json(const TrendReport& r);
Json to_json(const DimensionFit& f);
Json to_json(const Interval& i);
Json tvs_json(const TwoValuedSet& tvs);
Json loop_graph_json(const LoopGraph& lg);
Json br_json(const BrSet& br);

std::string svg_string(const LoopGraph& lg);
void render_svg(const LoopGraph& lg, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tvslab
