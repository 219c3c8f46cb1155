#include "ssreid/io.hpp"

#include "ssreid/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ssreid {

namespace {

constexpr std::array<char, 4> kFeatureMagic{'S', 'S', 'F', 'S'};
constexpr std::array<char, 4> kProjectionMagic{'S', 'S', 'P', 'J'};
constexpr std::array<char, 4> kMatrixMagic{'S', 'S', 'M', 'X'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
        std::memcpy(&v, buf, sizeof(T));
    }
    return v;
}

template <typename T>
void put(std::ostream& out, T v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error(ErrorKind::format, "unexpected end of binary data");
    return to_little(v);
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic, const char* what) {
    std::array<char, 4> got{};
    in.read(got.data(), 4);
    if (!in || got != magic) throw Error(ErrorKind::format, std::string("not a ") + what + " file (bad magic)");
    const auto version = get<std::uint8_t>(in);
    if (version != kVersion)
        throw Error(ErrorKind::format, std::string(what) + " version " + std::to_string(version) +
                                           " is not supported");
}

void put_magic(std::ostream& out, const std::array<char, 4>& magic) {
    out.write(magic.data(), 4);
    put<std::uint8_t>(out, kVersion);
}

std::uint64_t get_size(std::istream& in, std::uint64_t limit = (1ULL << 40)) {
    const auto v = get<std::uint64_t>(in);
    if (v > limit) throw Error(ErrorKind::format, "implausible size field in binary data");
    return v;
}

void put_matrix_colmajor(std::ostream& out, const Matrix& m) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) put<double>(out, m(i, j));
}

Matrix get_matrix_colmajor(std::istream& in) {
    const auto rows = static_cast<Index>(get_size(in));
    const auto cols = static_cast<Index>(get_size(in));
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = get<double>(in);
    return m;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t\r");
        const auto e = f.find_last_not_of(" \t\r");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& msg) {
    throw Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const char* what) {
    T v{};
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (s.empty() || ec != std::errc() || p != e)
        parse_fail(line, std::string("cannot parse ") + what + " '" + s + "'");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::io, "no such file '" + path.string() + "'");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

FeatureFormat guess_format(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".bin" || ext == ".ssfs") ? FeatureFormat::binary : FeatureFormat::csv;
}

FeatureSet read_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    long long d = -1, n = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line[0] != '#') parse_fail(lineno, "missing '# d=<int> n=<int> cols=...' header");
        std::istringstream hs(line.substr(1));
        std::string tok;
        std::string cols;
        while (hs >> tok) {
            if (tok.rfind("d=", 0) == 0) d = parse_number<long long>(tok.substr(2), lineno, "d");
            else if (tok.rfind("n=", 0) == 0) n = parse_number<long long>(tok.substr(2), lineno, "n");
            else if (tok.rfind("cols=", 0) == 0) cols = tok.substr(5);
        }
        if (d < 1 || n < 0) parse_fail(lineno, "header must declare d >= 1 and n");
        if (cols.rfind("person_id,view_id,split", 0) != 0)
            parse_fail(lineno, "header cols must start with person_id,view_id,split");
        break;
    }
    if (d < 1) throw Error(ErrorKind::parse, "empty feature file");

    std::vector<std::vector<double>> rows;
    FeatureSet fs;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto fields = split_commas(line);
        const long long got = static_cast<long long>(fields.size()) - 3;
        if (got != d)
            throw Error(ErrorKind::shape, "line " + std::to_string(lineno) + ": row " +
                                              std::to_string(rows.size() + 1) + " has " + std::to_string(got) +
                                              " features, expected " + std::to_string(d));
        if (fields[0].empty()) fs.person_id.emplace_back(std::nullopt);
        else fs.person_id.emplace_back(parse_number<PersonId>(fields[0], lineno, "person_id"));
        fs.view_id.push_back(parse_number<int>(fields[1], lineno, "view_id"));
        try {
            fs.split.push_back(parse_split_tag(fields[2]));
        } catch (const Error&) {
            parse_fail(lineno, "unknown split tag '" + fields[2] + "'");
        }
        std::vector<double> row(static_cast<std::size_t>(d));
        for (long long k = 0; k < d; ++k)
            row[static_cast<std::size_t>(k)] = parse_number<double>(fields[static_cast<std::size_t>(k + 3)], lineno, "feature");
        rows.push_back(std::move(row));
    }
    if (static_cast<long long>(rows.size()) != n)
        throw Error(ErrorKind::shape, "header declares n=" + std::to_string(n) + " but file has " +
                                          std::to_string(rows.size()) + " rows");
    fs.features.resize(d, static_cast<Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (long long i = 0; i < d; ++i) fs.features(i, static_cast<Index>(j)) = rows[j][static_cast<std::size_t>(i)];
    fs.validate();
    return fs;
}

void write_csv(const FeatureSet& fs, std::ostream& out) {
    fs.validate();
    const Index d = fs.dim();
    out << "# d=" << d << " n=" << fs.size() << " cols=person_id,view_id,split,f0..f" << d - 1 << "\n";
    char buf[64];
    for (Index j = 0; j < fs.size(); ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (fs.person_id[js]) out << *fs.person_id[js];
        out << ',' << fs.view_id[js] << ',' << to_string(fs.split[js]);
        for (Index i = 0; i < d; ++i) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, fs.features(i, j));
            out << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf));
        }
        out << '\n';
    }
}

FeatureSet read_binary(std::istream& in) {
    expect_magic(in, kFeatureMagic, "feature");
    FeatureSet fs;
    fs.features = get_matrix_colmajor(in);
    const auto n = static_cast<std::size_t>(fs.features.cols());
    for (std::size_t j = 0; j < n; ++j) {
        const auto has_id = get<std::uint8_t>(in);
        const auto id = get<std::int64_t>(in);
        fs.person_id.emplace_back(has_id ? std::optional<PersonId>(id) : std::nullopt);
        fs.view_id.push_back(get<std::int32_t>(in));
        const auto tag = get<std::uint8_t>(in);
        if (tag > 3) throw Error(ErrorKind::format, "bad split tag in binary data");
        fs.split.push_back(static_cast<SplitTag>(tag));
    }
    fs.validate();
    return fs;
}

void write_binary(const FeatureSet& fs, std::ostream& out) {
    fs.validate();
    put_magic(out, kFeatureMagic);
    put_matrix_colmajor(out, fs.features);
    for (Index j = 0; j < fs.size(); ++j) {
        const auto js = static_cast<std::size_t>(j);
        put<std::uint8_t>(out, fs.person_id[js] ? 1 : 0);
        put<std::int64_t>(out, fs.person_id[js].value_or(0));
        put<std::int32_t>(out, fs.view_id[js]);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(fs.split[js]));
    }
}

FeatureSet load_feature_set(const std::filesystem::path& path, FeatureFormat format) {
    auto in = open_in(path);
    return format == FeatureFormat::csv ? read_csv(in) : read_binary(in);
}

FeatureSet load_feature_set(const std::filesystem::path& path) {
    return load_feature_set(path, guess_format(path));
}

void save_feature_set(const FeatureSet& fs, const std::filesystem::path& path, FeatureFormat format) {
    auto out = open_out(path);
    if (format == FeatureFormat::csv) write_csv(fs, out);
    else write_binary(fs, out);
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

void write_projection(const Projection& p, std::ostream& out) {
    put_magic(out, kProjectionMagic);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(p.kind));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.basis.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.basis.cols()));
    for (Index i = 0; i < p.basis.rows(); ++i)
        for (Index j = 0; j < p.basis.cols(); ++j) put<double>(out, p.basis(i, j));
    if (p.kind == ProjectionKind::kernelized) {
        if (!p.context) throw Error(ErrorKind::invariant, "kernelized projection without training context");
        const auto& c = *p.context;
        put<std::uint8_t>(out, static_cast<std::uint8_t>(c.family));
        put<double>(out, c.mu);
        put<std::uint64_t>(out, c.bandwidths.size());
        for (double b : c.bandwidths) put<double>(out, b);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(c.beta.size()));
        for (Index i = 0; i < c.beta.size(); ++i) put<double>(out, c.beta(i));
        put_matrix_colmajor(out, c.train_features);
    }
}

Projection read_projection(std::istream& in) {
    expect_magic(in, kProjectionMagic, "projection");
    Projection p;
    const auto kind = get<std::uint8_t>(in);
    if (kind > 1) throw Error(ErrorKind::format, "unknown projection kind " + std::to_string(kind));
    p.kind = static_cast<ProjectionKind>(kind);
    const auto rows = static_cast<Index>(get_size(in));
    const auto cols = static_cast<Index>(get_size(in));
    p.basis.resize(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) p.basis(i, j) = get<double>(in);
    if (p.kind == ProjectionKind::kernelized) {
        KernelContext c;
        const auto fam = get<std::uint8_t>(in);
        if (fam > 1) throw Error(ErrorKind::format, "unknown kernel family " + std::to_string(fam));
        c.family = static_cast<KernelFamily>(fam);
        c.mu = get<double>(in);
        const auto nb = get_size(in, 1 << 20);
        for (std::uint64_t i = 0; i < nb; ++i) c.bandwidths.push_back(get<double>(in));
        const auto nbeta = static_cast<Index>(get_size(in, 1 << 20));
        c.beta.resize(nbeta);
        for (Index i = 0; i < nbeta; ++i) c.beta(i) = get<double>(in);
        c.train_features = get_matrix_colmajor(in);
        if (c.train_features.cols() != rows)
            throw Error(ErrorKind::format, "kernel context size does not match the basis");
        p.context = std::move(c);
    }
    return p;
}

void save_projection(const Projection& p, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_projection(p, out);
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

Projection load_projection(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_projection(in);
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    auto out = open_out(path);
    put_magic(out, kMatrixMagic);
    put_matrix_colmajor(out, m);
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

Matrix load_matrix(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_magic(in, kMatrixMagic, "matrix");
    return get_matrix_colmajor(in);
}

namespace {

struct Fnv {
    std::uint64_t h = 1469598103934665603ULL;
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 1099511628211ULL;
        }
    }
    template <typename T>
    void value(T v) {
        v = to_little(v);
        bytes(&v, sizeof v);
    }
};

}  // namespace

std::uint64_t matrix_hash(const Matrix& m) {
    Fnv f;
    f.value<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    f.value<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) f.value<double>(m(i, j));
    return f.h;
}

std::uint64_t dataset_hash(const FeatureSet& fs) {
    Fnv f;
    f.value<std::uint64_t>(matrix_hash(fs.features));
    for (std::size_t j = 0; j < fs.person_id.size(); ++j) {
        f.value<std::uint8_t>(fs.person_id[j] ? 1 : 0);
        f.value<std::int64_t>(fs.person_id[j].value_or(0));
        f.value<std::int32_t>(fs.view_id[j]);
        f.value<std::uint8_t>(static_cast<std::uint8_t>(fs.split[j]));
    }
    return f.h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

}  // namespace ssreid
