#include "latentprog/latent_core.hpp"

#include "latentprog/binary_io.hpp"
#include "latentprog/csv.hpp"
#include "latentprog/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace lp {

namespace bin {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::IoError, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::IoError, "failed writing " + path);
}

} // namespace bin

LatentVector LatentVector::from_doubles(std::span<const double> v) {
    std::vector<float> values(v.size());
    std::transform(v.begin(), v.end(), values.begin(), [](double x) { return static_cast<float>(x); });
    return LatentVector(std::move(values));
}

bool LatentVector::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](float x) { return std::isfinite(x); });
}

std::string_view side_name(Side side) noexcept { return side == Side::Left ? "left" : "right"; }

Side parse_side(std::string_view text) {
    if (text == "left" || text == "L" || text == "0") return Side::Left;
    if (text == "right" || text == "R" || text == "1") return Side::Right;
    fail(ErrorKind::FormatError, "unknown side '" + std::string(text) + "'");
}

std::string to_string(const KneeKey& key) { return key.subject_id + ":" + std::string(side_name(key.side)); }

std::span<const KneeRecord> LatentDictionary::visits(const KneeKey& key) const {
    auto it = ranges_.find(key);
    if (it == ranges_.end()) return {};
    return std::span<const KneeRecord>(records_).subspan(it->second.first, it->second.second - it->second.first);
}

std::vector<KneeKey> LatentDictionary::knees() const {
    std::vector<KneeKey> keys;
    keys.reserve(ranges_.size());
    for (const auto& [key, range] : ranges_) keys.push_back(key);
    return keys;
}

const KneeRecord* LatentDictionary::find(const VisitKey& key) const {
    for (const KneeRecord& r : visits(key.knee))
        if (r.visit_month == key.visit_month) return &r;
    return nullptr;
}

LatentDictionary make_dictionary(int dimension, std::vector<KneeRecord> records) {
    require(dimension >= 2, ErrorKind::InvalidArgument, "latent dimension must be >= 2");
    for (const KneeRecord& r : records) {
        require(r.latent.dim() == static_cast<std::size_t>(dimension), ErrorKind::DimensionMismatch,
                "latent of " + to_string(r.knee()) + " has dimension " + std::to_string(r.latent.dim()) +
                    ", expected " + std::to_string(dimension));
        require(r.latent.all_finite(), ErrorKind::InvalidArgument, "non-finite latent for " + to_string(r.knee()));
        require(r.visit_month >= 0, ErrorKind::InvalidArgument, "negative visit month for " + to_string(r.knee()));
        require(!r.kls || (*r.kls >= 0 && *r.kls <= 4), ErrorKind::InvalidGrade,
                "KLS out of range for " + to_string(r.knee()));
    }
    std::sort(records.begin(), records.end(),
              [](const KneeRecord& a, const KneeRecord& b) { return a.visit() < b.visit(); });
    for (std::size_t i = 1; i < records.size(); ++i) {
        require(records[i].visit() != records[i - 1].visit(), ErrorKind::DuplicateVisit,
                "duplicate visit " + to_string(records[i].knee()) + " month " + std::to_string(records[i].visit_month));
    }

    LatentDictionary dict;
    dict.dimension_ = dimension;
    dict.records_ = std::move(records);
    std::size_t start = 0;
    for (std::size_t i = 1; i <= dict.records_.size(); ++i) {
        if (i == dict.records_.size() || dict.records_[i].knee() != dict.records_[start].knee()) {
            dict.ranges_.emplace(dict.records_[start].knee(), std::make_pair(start, i));
            start = i;
        }
    }
    return dict;
}

LatentDictionary build_dictionary(std::span<const VisitRow> meta, const LatentTable& latents) {
    std::vector<KneeRecord> records;
    records.reserve(meta.size());
    std::optional<std::size_t> dimension;
    for (const VisitRow& row : meta) {
        auto it = latents.find(row.visit());
        require(it != latents.end(), ErrorKind::MissingLatent,
                "no latent for " + to_string(row.knee()) + " month " + std::to_string(row.visit_month));
        if (!dimension) dimension = it->second.dim();
        require(it->second.dim() == *dimension, ErrorKind::DimensionMismatch,
                "latent dimensions differ across visits");
        records.push_back({row.subject_id, row.side, row.visit_month, row.kls, it->second});
    }
    // An empty visit table still needs a dimension; take it from the latents.
    if (!dimension && !latents.empty()) dimension = latents.begin()->second.dim();
    return make_dictionary(dimension ? static_cast<int>(*dimension) : 2, std::move(records));
}

std::vector<TrajectoryPair> pair_trajectories(const LatentDictionary& dict) {
    std::vector<TrajectoryPair> pairs;
    for (const KneeKey& key : dict.knees()) {
        auto visits = dict.visits(key);
        const KneeRecord& base = visits.front();
        for (const KneeRecord& follow : visits.subspan(1)) {
            pairs.push_back({key, base.latent, follow.latent, base.visit_month, follow.visit_month,
                             follow.visit_month - base.visit_month});
        }
    }
    return pairs;
}

namespace {

constexpr std::string_view kStoreMagic = "LTNT";
constexpr std::uint32_t kStoreVersion = 1;

} // namespace

std::vector<std::uint8_t> encode_latent_store(const LatentDictionary& dict) {
    bin::Writer w;
    w.bytes(kStoreMagic);
    w.u32(kStoreVersion);
    w.u32(static_cast<std::uint32_t>(dict.dimension()));
    w.u64(dict.size());
    for (const KneeRecord& r : dict.records()) {
        require(r.subject_id.size() <= 0xffff, ErrorKind::InvalidArgument, "subject id too long for the store");
        require(r.visit_month <= 0xffff, ErrorKind::InvalidArgument, "visit month too large for the store");
        w.u16(static_cast<std::uint16_t>(r.subject_id.size()));
        w.bytes(r.subject_id);
        w.u8(static_cast<std::uint8_t>(r.side));
        w.u16(static_cast<std::uint16_t>(r.visit_month));
        w.i8(static_cast<std::int8_t>(r.kls.value_or(-1)));
        for (float v : r.latent.values) w.f32(v);
    }
    return std::move(w.data());
}

LatentDictionary decode_latent_store(std::span<const std::uint8_t> bytes) {
    bin::Reader r(bytes);
    require(r.bytes(4) == kStoreMagic, ErrorKind::FormatError, "latent store: bad magic");
    const std::uint32_t version = r.u32();
    require(version == kStoreVersion, ErrorKind::FormatError, "latent store: unsupported version " + std::to_string(version));
    const auto dimension = static_cast<int>(r.u32());
    const std::uint64_t count = r.u64();
    std::vector<KneeRecord> records;
    for (std::uint64_t i = 0; i < count; ++i) {
        KneeRecord rec;
        rec.subject_id = r.bytes(r.u16());
        const std::uint8_t side = r.u8();
        require(side <= 1, ErrorKind::FormatError, "latent store: bad side byte");
        rec.side = static_cast<Side>(side);
        rec.visit_month = r.u16();
        const std::int8_t kls = r.i8();
        require(kls >= -1 && kls <= 4, ErrorKind::FormatError, "latent store: bad KLS byte");
        if (kls >= 0) rec.kls = kls;
        rec.latent.values.resize(static_cast<std::size_t>(dimension));
        for (float& v : rec.latent.values) v = r.f32();
        records.push_back(std::move(rec));
    }
    require(r.at_end(), ErrorKind::FormatError, "latent store: trailing bytes");
    return make_dictionary(dimension, std::move(records));
}

void save_latent_store(const std::filesystem::path& path, const LatentDictionary& dict) {
    bin::write_file(path.string(), encode_latent_store(dict));
}

LatentDictionary load_latent_store(const std::filesystem::path& path) {
    return decode_latent_store(bin::read_file(path.string()));
}

std::vector<VisitRow> parse_visit_csv(const std::string& text) {
    const csv::Table table = csv::parse(text);
    const std::size_t c_id = table.column("subject_id");
    const std::size_t c_side = table.column("side");
    const std::size_t c_month = table.column("visit_month");
    const std::size_t c_kls = table.column("kls");
    std::vector<VisitRow> rows;
    for (const auto& f : table.rows) {
        VisitRow row;
        row.subject_id = f[c_id];
        require(!row.subject_id.empty(), ErrorKind::FormatError, "visit CSV: empty subject_id");
        row.side = parse_side(f[c_side]);
        const long month = csv::to_long(f[c_month], "visit_month");
        require(month >= 0, ErrorKind::FormatError, "visit CSV: negative visit_month");
        row.visit_month = static_cast<int>(month);
        if (!f[c_kls].empty()) {
            const long kls = csv::to_long(f[c_kls], "kls");
            require(kls >= 0 && kls <= 4, ErrorKind::InvalidGrade, "visit CSV: KLS out of range");
            row.kls = static_cast<int>(kls);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<VisitRow> read_visit_csv(const std::filesystem::path& path) { return parse_visit_csv(csv::read_text(path)); }

void write_visit_csv(const std::filesystem::path& path, std::span<const VisitRow> rows) {
    std::ostringstream out;
    out << "subject_id,side,visit_month,kls\n";
    for (const VisitRow& r : rows) {
        out << r.subject_id << ',' << side_name(r.side) << ',' << r.visit_month << ',';
        if (r.kls) out << *r.kls;
        out << '\n';
    }
    csv::write_text(path, out.str());
}

} // namespace lp
