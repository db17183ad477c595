#include "stlf/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <json.hpp>

#include "stlf/io.hpp"

namespace stlf {

using json = nlohmann::ordered_json;

namespace {

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t read_u64_le(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::uint32_t read_u32_le(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::uint32_t crc_of(const char* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks so large payloads stay correct.
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string parameter_bytes(const Model& model) {
  std::string out;
  out.reserve(static_cast<std::size_t>(model.parameter_count()) * 8);
  for (const auto& p : model.parameters()) {
    for (Index i = 0; i < p.tensor->size(); ++i) append_u64_le(out, std::bit_cast<std::uint64_t>((*p.tensor)(i)));
  }
  return out;
}

json shape_json(const FeatureShape& s) {
  return s.sequence ? json::array({s.steps, s.width}) : json::array({s.width});
}

json lstm_json(const LstmParams<double>& p) {
  return {{"units", p.units()}, {"input_dim", p.input_dim()}};
}

json layer_json(const Layer& layer) {
  json j;
  std::visit(
      [&](const auto& l) {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, Conv1dLayer>) {
          j = {{"filters", l.params.filters()},
               {"in_channels", l.params.in_channels()},
               {"kernel", l.params.kernel()},
               {"padding", to_string(l.params.padding)}};
        } else if constexpr (std::is_same_v<L, MaxPoolLayer>) {
          j = {{"pool", l.pool}};
        } else if constexpr (std::is_same_v<L, LstmLayer>) {
          j = lstm_json(l.params);
          j["return_sequences"] = l.return_sequences;
        } else if constexpr (std::is_same_v<L, BiLstmLayer>) {
          j = lstm_json(l.forward);
          j["return_sequences"] = l.return_sequences;
        } else if constexpr (std::is_same_v<L, DenseLayer>) {
          j = {{"inputs", l.params.inputs()}, {"outputs", l.params.outputs()}};
        } else {
          j = json::object();
        }
      },
      layer);
  return j;
}

json header_json(const Model& model) {
  const ModelInfo& info = model.info();
  json h;
  h["format_version"] = kCheckpointVersion;
  h["architecture"] = to_string(model.architecture());
  h["window"] = model.window();
  h["horizon"] = info.horizon;
  h["split_ratio"] = info.split_ratio;
  h["max_mw"] = info.max_mw;
  h["width_scale"] = info.width_scale;
  h["widths"] = {{"conv1", info.widths.conv1},
                 {"conv2", info.widths.conv2},
                 {"conv3", info.widths.conv3},
                 {"recurrent", info.widths.recurrent}};
  h["seed"] = info.seed;
  h["epochs"] = info.epochs_trained;
  h["scaler"] = info.scaler ? json{{"x_min", info.scaler->x_min()}, {"x_max", info.scaler->x_max()}}
                            : json(nullptr);

  const auto params = model.parameters();
  std::size_t next_param = 0;
  json layers = json::array();
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    json entry;
    entry["name"] = model.layer_names()[k];
    entry["kind"] = std::string(layer_kind(model.layers()[k]));
    entry.update(layer_json(model.layers()[k]));
    entry["output_shape"] = shape_json(model.shapes()[k + 1]);
    json plist = json::array();
    const std::string prefix = model.layer_names()[k] + ".";
    while (next_param < params.size() && params[next_param].name.starts_with(prefix)) {
      plist.push_back({{"name", params[next_param].name}, {"shape", params[next_param].tensor->shape()}});
      ++next_param;
    }
    entry["params"] = std::move(plist);
    layers.push_back(std::move(entry));
  }
  h["layers"] = std::move(layers);
  h["parameter_count"] = model.parameter_count();
  return h;
}

LstmParams<double> lstm_from(const json& j) {
  return LstmParams<double>(j.at("units").get<Index>(), j.at("input_dim").get<Index>());
}

Layer layer_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "conv1d") {
    const auto padding = j.at("padding").get<std::string>();
    if (padding != "same" && padding != "valid") throw CheckpointError("unknown padding '" + padding + "'");
    return Conv1dLayer{ConvParams<double>(j.at("filters").get<Index>(), j.at("in_channels").get<Index>(),
                                          j.at("kernel").get<Index>(),
                                          padding == "same" ? Padding::same : Padding::valid)};
  }
  if (kind == "relu") return ReluLayer{};
  if (kind == "maxpool1d") return MaxPoolLayer{j.at("pool").get<Index>()};
  if (kind == "lstm") return LstmLayer{lstm_from(j), j.at("return_sequences").get<bool>()};
  if (kind == "bilstm") return BiLstmLayer{lstm_from(j), lstm_from(j), j.at("return_sequences").get<bool>()};
  if (kind == "dense") {
    return DenseLayer{DenseParams<double>(j.at("outputs").get<Index>(), j.at("inputs").get<Index>())};
  }
  throw CheckpointError("unknown layer kind '" + kind + "'");
}

Model model_from_header(const json& h) {
  std::vector<Layer> layers;
  for (const auto& l : h.at("layers")) layers.push_back(layer_from(l));

  ModelInfo info;
  info.width_scale = h.at("width_scale").get<double>();
  const auto& w = h.at("widths");
  info.widths = {w.at("conv1").get<Index>(), w.at("conv2").get<Index>(), w.at("conv3").get<Index>(),
                 w.at("recurrent").get<Index>()};
  info.seed = h.at("seed").get<std::uint64_t>();
  info.horizon = h.at("horizon").get<Index>();
  info.split_ratio = h.at("split_ratio").get<double>();
  info.max_mw = h.at("max_mw").get<double>();
  info.epochs_trained = h.at("epochs").get<Index>();
  if (!h.at("scaler").is_null()) {
    info.scaler = Scaler(h["scaler"].at("x_min").get<double>(), h["scaler"].at("x_max").get<double>());
  }
  Model model(parse_architecture(h.at("architecture").get<std::string>()), h.at("window").get<Index>(),
              std::move(layers), std::move(info));

  // The manifest must name exactly the tensors the rebuilt layers expose.
  std::vector<std::pair<std::string, Shape>> manifest;
  for (const auto& l : h.at("layers")) {
    for (const auto& p : l.at("params")) manifest.emplace_back(p.at("name").get<std::string>(), p.at("shape").get<Shape>());
  }
  const auto params = model.parameters();
  if (manifest.size() != params.size()) throw CheckpointError("parameter manifest does not match the layers");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (manifest[i].first != params[i].name || manifest[i].second != params[i].tensor->shape()) {
      throw CheckpointError("parameter manifest entry '" + manifest[i].first + "' does not match layer '" +
                            params[i].name + "'");
    }
  }
  return model;
}

}  // namespace

std::string serialize_model(const Model& model) {
  std::string body = header_json(model).dump();
  body.push_back('\n');
  body += parameter_bytes(model);
  const std::uint32_t crc = crc_of(body.data(), body.size());

  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  out += body;
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((crc >> (8 * i)) & 0xFFu));
  return out;
}

Model deserialize_model(const std::string& bytes) {
  constexpr std::size_t kMagic = sizeof kCheckpointMagic;
  if (bytes.size() < kMagic || std::memcmp(bytes.data(), kCheckpointMagic, kMagic) != 0) {
    throw BadMagicError("not a model checkpoint (bad magic bytes)");
  }
  const std::size_t newline = bytes.find('\n', kMagic);
  if (newline == std::string::npos) throw TruncatedError("checkpoint truncated inside the header");

  json header;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(kMagic),
                         bytes.begin() + static_cast<std::ptrdiff_t>(newline));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw VersionError("checkpoint format version " + std::to_string(version) +
                         " is not supported (supported versions: " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto count = header.at("parameter_count").get<std::size_t>();
    const std::size_t params_begin = newline + 1;
    const std::size_t expected = params_begin + count * 8 + 4;
    if (bytes.size() < expected) {
      throw TruncatedError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes, expected " +
                           std::to_string(expected));
    }
    if (bytes.size() > expected) throw CheckpointError("checkpoint has trailing bytes after the checksum");

    const std::uint32_t stored = read_u32_le(bytes.data() + expected - 4);
    const std::uint32_t actual = crc_of(bytes.data() + kMagic, expected - 4 - kMagic);
    if (stored != actual) throw ChecksumError("checkpoint checksum mismatch (file is corrupted)");

    Model model = model_from_header(header);
    if (static_cast<std::size_t>(model.parameter_count()) != count) {
      throw CheckpointError("parameter_count disagrees with the layer manifest");
    }
    const char* p = bytes.data() + params_begin;
    for (auto& param : model.parameters()) {
      for (Index i = 0; i < param.tensor->size(); ++i, p += 8) (*param.tensor)(i) = std::bit_cast<double>(read_u64_le(p));
    }
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("checkpoint describes an inconsistent model: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

std::uint32_t parameter_checksum(const Model& model) {
  const std::string bytes = parameter_bytes(model);
  return crc_of(bytes.data(), bytes.size());
}

}  // namespace stlf
