#include "atomtrans/field_io.hpp"

#include <cstring>
#include <fstream>

namespace atomtrans {

namespace {
constexpr char kMagic[4] = {'P', 'H', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
}  // namespace

void write_field(const std::filesystem::path& path, const PhaseField& field) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_field: cannot open " + path.string());
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, static_cast<std::uint32_t>(field.grid.n_x));
    put(os, static_cast<std::uint32_t>(field.grid.n_p));
    put(os, field.grid.x_min);
    put(os, field.grid.x_max);
    put(os, field.grid.p_min);
    put(os, field.grid.p_max);
    put(os, field.time);
    put(os, static_cast<std::uint8_t>(field.kind));
    os.write(reinterpret_cast<const char*>(field.values.data()),
             static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write_field: write failed for " + path.string());
}

PhaseField read_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_field: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_field: bad magic in " + path.string());
    auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw std::runtime_error("read_field: unsupported version");
    PhaseField f;
    f.grid.n_x = static_cast<int>(get<std::uint32_t>(is));
    f.grid.n_p = static_cast<int>(get<std::uint32_t>(is));
    f.grid.x_min = get<double>(is);
    f.grid.x_max = get<double>(is);
    f.grid.p_min = get<double>(is);
    f.grid.p_max = get<double>(is);
    f.time = get<double>(is);
    f.kind = static_cast<FieldKind>(get<std::uint8_t>(is));
    f.grid.validate();
    f.values.resize(f.grid.size());
    is.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("read_field: truncated file " + path.string());
    return f;
}

}  // namespace atomtrans
