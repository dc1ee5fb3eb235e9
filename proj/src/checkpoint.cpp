#include "restc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace restc {

namespace {

constexpr char kMagic[5] = {'R', 'S', 'T', 'C', '1'};

void put_u32(std::ofstream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ofstream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated stream");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("checkpoint: truncated stream");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::ifstream& in) {
  uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_record(std::ofstream& out, const std::string& name, const std::vector<int>& shape,
                const Scalar* data, size_t n) {
  put_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<uint32_t>(shape.size()));
  size_t expect = 1;
  for (int d : shape) {
    put_u64(out, static_cast<uint64_t>(d));
    expect *= static_cast<size_t>(d);
  }
  if (expect != n) throw UsageError("checkpoint: record " + name + " shape/value mismatch");
  for (size_t i = 0; i < n; ++i) put_f64(out, data[i]);
}

void put_scalar_record(std::ofstream& out, const std::string& name, double v) {
  put_record(out, name, {1}, &v, 1);
}

void put_text_record(std::ofstream& out, const std::string& name, const std::string& text) {
  std::vector<Scalar> chars(text.begin(), text.end());
  put_record(out, name, {static_cast<int>(chars.size())}, chars.data(), chars.size());
}

struct RawRecord {
  std::vector<int> shape;
  std::vector<Scalar> data;
};

// Splits a u64 into two f64-exact 32-bit halves (f64 holds ints < 2^53).
void put_u64_record(std::ofstream& out, const std::string& name, uint64_t v) {
  Scalar halves[2] = {static_cast<Scalar>(v & 0xffffffffull), static_cast<Scalar>(v >> 32)};
  put_record(out, name, {2}, halves, 2);
}

uint64_t u64_from(const RawRecord& r, const std::string& name) {
  if (r.data.size() != 2) throw DataError("checkpoint: record " + name + " is not a u64 pair");
  return static_cast<uint64_t>(r.data[0]) | (static_cast<uint64_t>(r.data[1]) << 32);
}

const RawRecord& need(const std::map<std::string, RawRecord>& records, const std::string& name) {
  auto it = records.find(name);
  if (it == records.end()) throw DataError("checkpoint: missing record " + name);
  return it->second;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, AdamState* adam,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  const std::vector<NamedParam> named = params.named();
  if (adam && adam->param_count() != named.size())
    throw UsageError("checkpoint: optimizer state does not cover the parameter list");
  uint32_t n_records = 8 + static_cast<uint32_t>(named.size());
  if (adam) n_records += 2 * static_cast<uint32_t>(named.size());
  out.write(kMagic, 5);
  put_u32(out, n_records);

  const Scalar dims_vals[7] = {
      static_cast<Scalar>(meta.dims.n_items),      static_cast<Scalar>(meta.dims.max_len),
      static_cast<Scalar>(meta.dims.hidden),       static_cast<Scalar>(meta.dims.heads),
      static_cast<Scalar>(meta.dims.sestrans_layers), static_cast<Scalar>(meta.dims.mgat_layers),
      static_cast<Scalar>(meta.dims.cfg_layers)};
  put_record(out, "meta/dims", {7}, dims_vals, 7);
  put_u64_record(out, "meta/config_hash", meta.config_hash);
  put_scalar_record(out, "meta/epoch", meta.epoch);
  put_scalar_record(out, "meta/adam_step", static_cast<double>(meta.adam_step));
  put_scalar_record(out, "meta/lr", meta.lr);
  put_scalar_record(out, "meta/has_adam", adam ? 1.0 : 0.0);
  put_text_record(out, "meta/data_rng_state", meta.data_rng_state);
  put_text_record(out, "meta/train_rng_state", meta.train_rng_state);

  for (const NamedParam& p : named)
    put_record(out, "param/" + p.name, p.tensor.shape(), p.tensor.values().data(),
               p.tensor.size());
  if (adam) {
    for (size_t i = 0; i < named.size(); ++i) {
      const std::vector<Scalar>& m = adam->moment1(i);
      const std::vector<Scalar>& v = adam->moment2(i);
      put_record(out, "adam_m/" + named[i].name, {static_cast<int>(m.size())}, m.data(), m.size());
      put_record(out, "adam_v/" + named[i].name, {static_cast<int>(v.size())}, v.data(), v.size());
    }
  }
  out.flush();
  if (!out) throw DataError("failed writing checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kMagic, 5) != 0)
    throw DataError("checkpoint " + path + ": bad magic (not a checkpoint file?)");
  const uint32_t n_records = get_u32(in);
  std::map<std::string, RawRecord> records;
  for (uint32_t r = 0; r < n_records; ++r) {
    const uint32_t name_len = get_u32(in);
    if (name_len > 4096) throw DataError("checkpoint: implausible record name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw DataError("checkpoint: truncated stream");
    const uint32_t rank = get_u32(in);
    if (rank > 8) throw DataError("checkpoint: implausible record rank");
    RawRecord rec;
    size_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      const uint64_t d = get_u64(in);
      if (d > (1ull << 32)) throw DataError("checkpoint: implausible dimension");
      rec.shape.push_back(static_cast<int>(d));
      n *= static_cast<size_t>(d);
    }
    rec.data.resize(n);
    for (size_t i = 0; i < n; ++i) rec.data[i] = get_f64(in);
    if (!records.emplace(std::move(name), std::move(rec)).second)
      throw DataError("checkpoint: duplicate record");
  }

  LoadedCheckpoint loaded;
  const RawRecord& dims_rec = need(records, "meta/dims");
  if (dims_rec.data.size() != 7) throw DataError("checkpoint: malformed meta/dims");
  loaded.meta.dims.n_items = static_cast<int>(dims_rec.data[0]);
  loaded.meta.dims.max_len = static_cast<int>(dims_rec.data[1]);
  loaded.meta.dims.hidden = static_cast<int>(dims_rec.data[2]);
  loaded.meta.dims.heads = static_cast<int>(dims_rec.data[3]);
  loaded.meta.dims.sestrans_layers = static_cast<int>(dims_rec.data[4]);
  loaded.meta.dims.mgat_layers = static_cast<int>(dims_rec.data[5]);
  loaded.meta.dims.cfg_layers = static_cast<int>(dims_rec.data[6]);
  loaded.meta.config_hash = u64_from(need(records, "meta/config_hash"), "meta/config_hash");
  if (expected_hash != 0 && loaded.meta.config_hash != expected_hash)
    throw UsageError("checkpoint " + path +
                     " was written under a different configuration; pass the matching config");
  loaded.meta.epoch = static_cast<int>(need(records, "meta/epoch").data.at(0));
  loaded.meta.adam_step = static_cast<int64_t>(need(records, "meta/adam_step").data.at(0));
  loaded.meta.lr = need(records, "meta/lr").data.at(0);
  loaded.has_adam = need(records, "meta/has_adam").data.at(0) != 0.0;
  auto text_of = [&](const std::string& name) {
    const RawRecord& r = need(records, name);
    std::string s;
    s.reserve(r.data.size());
    for (Scalar c : r.data) s.push_back(static_cast<char>(c));
    return s;
  };
  loaded.meta.data_rng_state = text_of("meta/data_rng_state");
  loaded.meta.train_rng_state = text_of("meta/train_rng_state");

  // Rebuild the parameter inventory for these dims, then overwrite every
  // tensor from its record; a missing or misshapen record is a hard error.
  Rng scratch(1);
  loaded.params = ModelParams::init(loaded.meta.dims, scratch);
  std::vector<NamedParam> named = loaded.params.named();
  for (NamedParam& p : named) {
    const RawRecord& rec = need(records, "param/" + p.name);
    if (rec.shape != p.tensor.shape())
      throw DataError("checkpoint: record param/" + p.name + " has the wrong shape");
    std::copy(rec.data.begin(), rec.data.end(), p.tensor.values().begin());
  }
  if (loaded.has_adam) {
    loaded.adam_m.reserve(named.size());
    loaded.adam_v.reserve(named.size());
    for (const NamedParam& p : named) {
      const RawRecord& m = need(records, "adam_m/" + p.name);
      const RawRecord& v = need(records, "adam_v/" + p.name);
      if (m.data.size() != p.tensor.size() || v.data.size() != p.tensor.size())
        throw DataError("checkpoint: optimizer record for " + p.name + " has the wrong size");
      loaded.adam_m.push_back(m.data);
      loaded.adam_v.push_back(v.data);
    }
  }
  return loaded;
}

}  // namespace restc
