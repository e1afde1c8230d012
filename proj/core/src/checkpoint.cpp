#include "medaug/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "medaug/errors.hpp"
#include "medaug/fsio.hpp"

namespace medaug {

namespace {

constexpr char kMagic[4] = {'M', 'A', 'U', 'G'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out += s;
}

class Cursor {
  public:
    Cursor(const std::string& data, const std::string& path) : data_(data), path_(path) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i]))
                 << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i]))
                 << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str() {
        std::uint64_t len = u64();
        need(len);
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void raw(char* dst, std::size_t len) {
        need(len);
        std::memcpy(dst, data_.data() + pos_, len);
        pos_ += len;
    }

    bool exhausted() const { return pos_ == data_.size(); }

  private:
    void need(std::uint64_t n) {
        if (pos_ + n > data_.size()) throw IoError("truncated checkpoint: " + path_);
    }

    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add_hyper(const std::string& name, double value) {
    hypers.emplace_back(name, value);
}

void Checkpoint::add_tensor(const std::string& name, const Tensor& t) {
    if (!t.defined()) throw ValidationError("cannot store undefined tensor " + name);
    tensors.emplace_back(name, t);
}

double Checkpoint::hyper(const std::string& name) const {
    for (const auto& [key, value] : hypers)
        if (key == name) return value;
    throw ValidationError("checkpoint has no hyperparameter " + name);
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [key, value] : tensors)
        if (key == name) return value;
    throw ValidationError("checkpoint has no tensor " + name);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(ckpt.kind));

    put_u64(out, ckpt.vocab_tokens.size());
    for (const std::string& tok : ckpt.vocab_tokens) put_str(out, tok);

    put_u64(out, ckpt.hypers.size());
    for (const auto& [name, value] : ckpt.hypers) {
        put_str(out, name);
        put_f64(out, value);
    }

    put_u64(out, ckpt.tensors.size());
    for (const auto& [name, t] : ckpt.tensors) {
        put_str(out, name);
        put_u64(out, t.ndim());
        for (std::size_t d : t.shape()) put_u64(out, d);
        for (double v : t.value()) put_f64(out, v);
    }

    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::string data = read_file(path);
    Cursor cur(data, path);

    char magic[4];
    cur.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a MAUG checkpoint: " + path);
    std::uint32_t version = cur.u32();
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    std::uint32_t kind = cur.u32();
    if (kind != 1 && kind != 2)
        throw IoError("unknown checkpoint kind " + std::to_string(kind));
    ckpt.kind = static_cast<CheckpointKind>(kind);

    std::uint64_t n_vocab = cur.u64();
    ckpt.vocab_tokens.reserve(n_vocab);
    for (std::uint64_t i = 0; i < n_vocab; ++i) ckpt.vocab_tokens.push_back(cur.str());

    std::uint64_t n_hypers = cur.u64();
    for (std::uint64_t i = 0; i < n_hypers; ++i) {
        std::string name = cur.str();
        double value = cur.f64();
        ckpt.hypers.emplace_back(std::move(name), value);
    }

    std::uint64_t n_tensors = cur.u64();
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
        std::string name = cur.str();
        std::uint64_t ndim = cur.u64();
        if (ndim == 0 || ndim > 2)
            throw IoError("checkpoint tensor " + name + " has unsupported rank");
        std::vector<std::size_t> shape(ndim);
        for (std::uint64_t d = 0; d < ndim; ++d) shape[d] = cur.u64();
        Tensor t(shape);
        for (double& v : t.value()) v = cur.f64();
        ckpt.tensors.emplace_back(std::move(name), t);
    }

    if (!cur.exhausted()) throw IoError("trailing bytes in checkpoint: " + path);
    return ckpt;
}

}  // namespace medaug
