#include "nsstab/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace nsstab {

namespace {

constexpr const char* kMagic = "nsstab-checkpoint";

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

std::uint32_t crc_of(const std::string& bytes)
{
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

} // namespace

nlohmann::json grid_to_json(const GridSpec& grid)
{
  return {{"box_length", grid.box_length},
          {"points_per_axis", grid.points_per_axis},
          {"dealias_fraction", grid.dealias_fraction}};
}

GridSpec grid_from_json(const nlohmann::json& j)
{
  GridSpec g;
  g.box_length = j.at("box_length").get<double>();
  g.points_per_axis = j.at("points_per_axis").get<int>();
  g.dealias_fraction = j.at("dealias_fraction").get<double>();
  g.validate();
  return g;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointContents& contents)
{
  const std::size_t modes = ModeTable::for_grid(contents.grid)->size();
  for (const auto& f : contents.fields)
    if (!(f.grid() == contents.grid))
      throw CheckpointError("write_checkpoint: field grid differs from header grid");

  const std::size_t field_bytes = modes * 3 * sizeof(cplx);
  nlohmann::json header{{"version", kCheckpointVersion},
                        {"kind", contents.kind},
                        {"grid", grid_to_json(contents.grid)},
                        {"mode_count", modes},
                        {"field_count", contents.fields.size()},
                        {"payload_bytes", field_bytes * contents.fields.size()},
                        {"meta", contents.meta}};

  std::string bytes = std::string(kMagic) + "\n" + header.dump() + "\n";
  for (const auto& f : contents.fields) {
    const auto c = f.coeffs();
    bytes.append(reinterpret_cast<const char*>(c.data()), field_bytes);
  }
  char trailer[32];
  std::snprintf(trailer, sizeof trailer, "crc32 %08x\n", crc_of(bytes));
  bytes += trailer;

  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw CheckpointError("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw CheckpointError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CheckpointContents read_checkpoint(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  // Trailer: "crc32 XXXXXXXX\n" is 15 bytes.
  constexpr std::size_t trailer_len = 15;
  if (bytes.size() < trailer_len || bytes.compare(bytes.size() - trailer_len, 6, "crc32 ") != 0)
    throw CheckpointError("checkpoint " + path.string() + ": missing checksum trailer");
  const std::string body = bytes.substr(0, bytes.size() - trailer_len);
  const std::string hex = bytes.substr(bytes.size() - trailer_len + 6, 8);
  std::uint32_t stored = 0;
  try {
    stored = static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16));
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint " + path.string() + ": malformed checksum");
  }
  if (stored != crc_of(body))
    throw CheckpointError("checkpoint " + path.string() + ": checksum mismatch");

  const auto nl1 = body.find('\n');
  if (nl1 == std::string::npos || body.compare(0, nl1, kMagic) != 0)
    throw CheckpointError("checkpoint " + path.string() + ": bad magic line");
  const auto nl2 = body.find('\n', nl1 + 1);
  if (nl2 == std::string::npos)
    throw CheckpointError("checkpoint " + path.string() + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(body.substr(nl1 + 1, nl2 - nl1 - 1));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + ": bad header: " + e.what());
  }

  CheckpointContents out;
  try {
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
    out.kind = header.at("kind").get<std::string>();
    out.grid = grid_from_json(header.at("grid"));
    out.meta = header.at("meta");
    const auto table = ModeTable::for_grid(out.grid);
    const auto modes = header.at("mode_count").get<std::size_t>();
    const auto count = header.at("field_count").get<std::size_t>();
    const auto payload = header.at("payload_bytes").get<std::size_t>();
    const std::size_t field_bytes = modes * 3 * sizeof(cplx);
    if (modes != table->size() || payload != count * field_bytes || body.size() - (nl2 + 1) != payload)
      throw CheckpointError("checkpoint " + path.string() + ": payload size mismatch");
    const char* p = body.data() + nl2 + 1;
    for (std::size_t i = 0; i < count; ++i) {
      SpectralVectorField f(table);
      std::memcpy(f.coeffs().data(), p + i * field_bytes, field_bytes);
      f.set_divergence_free(f.divergence_residual() <= 1e-12);
      out.fields.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + ": bad header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("checkpoint " + path.string() + ": " + e.what());
  }
  return out;
}

void write_field(const std::filesystem::path& path, const SpectralVectorField& f, const nlohmann::json& meta)
{
  write_checkpoint(path, CheckpointContents{"field", f.grid(), meta, {f}});
}

SpectralVectorField read_field(const std::filesystem::path& path, nlohmann::json* meta)
{
  auto c = read_checkpoint(path);
  if (c.fields.size() != 1)
    throw CheckpointError("checkpoint " + path.string() + ": expected exactly one field");
  if (meta != nullptr)
    *meta = std::move(c.meta);
  return std::move(c.fields.front());
}

} // namespace nsstab
