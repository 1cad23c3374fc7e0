#include "cxrgan/clf/tensor_bundle.hpp"

#include <torch/torch.h>

#include <cstring>

#include "cxrgan/errors.hpp"
#include "cxrgan/util/fs.hpp"

namespace cxrgan::clf {

namespace {

constexpr char kMagic[] = "CXRGTB01";
constexpr std::size_t kMagicLen = 8;

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        T value;
        std::memcpy(&value, take(sizeof(T)), sizeof(T));
        return value;
    }
    const char* take(std::size_t n) {
        if (n > bytes_.size() - pos_) throw IoError("truncated tensor bundle");
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const torch::Tensor* TensorBundle::find(const std::string& name) const {
    for (const auto& [key, tensor] : tensors) {
        if (key == name) return &tensor;
    }
    return nullptr;
}

std::string encode_bundle(const TensorBundle& bundle) {
    std::string out(kMagic, kMagicLen);
    const auto meta = bundle.metadata.dump();
    put<std::uint64_t>(out, meta.size());
    out += meta;
    put<std::uint64_t>(out, bundle.tensors.size());
    for (const auto& [name, tensor] : bundle.tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        torch::Tensor t = tensor.detach().cpu().contiguous();
        std::uint8_t dtype = 0;
        if (t.scalar_type() == torch::kInt64) {
            dtype = 1;
        } else {
            t = t.to(torch::kFloat32);
        }
        put<std::uint8_t>(out, dtype);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
        for (auto d : t.sizes()) put<std::int64_t>(out, d);
        out.append(static_cast<const char*>(t.data_ptr()), t.numel() * t.element_size());
    }
    return out;
}

TensorBundle decode_bundle(const std::string& bytes) {
    Reader in(bytes);
    if (std::memcmp(in.take(kMagicLen), kMagic, kMagicLen) != 0) throw IoError("not a tensor bundle");
    TensorBundle bundle;
    const auto meta_len = in.get<std::uint64_t>();
    const char* meta = in.take(meta_len);
    try {
        bundle.metadata = nlohmann::json::parse(meta, meta + meta_len);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad bundle metadata: ") + e.what());
    }
    const auto count = in.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = in.get<std::uint32_t>();
        std::string name(in.take(name_len), name_len);
        const auto dtype = in.get<std::uint8_t>();
        if (dtype > 1) throw IoError("unknown dtype in tensor bundle");
        const auto rank = in.get<std::uint32_t>();
        std::vector<std::int64_t> dims;
        std::int64_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            dims.push_back(in.get<std::int64_t>());
            if (dims.back() < 0) throw IoError("negative dimension in tensor bundle");
            numel *= dims.back();
        }
        const auto type = dtype == 1 ? torch::kInt64 : torch::kFloat32;
        auto t = torch::empty(dims, type);
        const auto nbytes = static_cast<std::size_t>(numel) * t.element_size();
        std::memcpy(t.data_ptr(), in.take(nbytes), nbytes);
        bundle.tensors.emplace_back(std::move(name), std::move(t));
    }
    return bundle;
}

void write_bundle(const std::filesystem::path& path, const TensorBundle& bundle) {
    util::atomic_write(path, encode_bundle(bundle));
}

TensorBundle read_bundle(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw MissingArtifactError("file missing: " + path.string());
    return decode_bundle(util::read_file(path));
}

}  // namespace cxrgan::clf
