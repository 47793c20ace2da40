#include "xfmr/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xfmr/binio.hpp"
#include "xfmr/rng.hpp"

namespace xfmr {

SweepAxis SweepAxis::parse(const std::string& text) {
    SweepAxis a;
    char trail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &a.lo, &a.hi, &a.steps, &trail) != 3)
        throw ConfigError("malformed sweep axis (expected lo:hi:steps): '" + text + "'");
    if (a.steps < 2) throw ConfigError("sweep axis needs at least 2 steps: '" + text + "'");
    return a;
}

std::string SweepAxis::to_string() const {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.17g:%.17g:%d", lo, hi, steps);
    return buf;
}

void GridSpec::validate() const {
    for (const SweepAxis* a : {&d_out, &w_p, &w_s, &c1, &c2})
        if (a->steps < 2) throw std::invalid_argument("grid spec: every dimension needs >= 2 steps");
}

std::string GridSpec::describe() const {
    std::ostringstream os;
    os << "tech=" << tech << " d_out=" << d_out.to_string() << " w_p=" << w_p.to_string()
       << " w_s=" << w_s.to_string() << " c1=" << c1.to_string() << " c2=" << c2.to_string();
    return os.str();
}

GridSpec GridSpec::from_config(const Config& cfg, const std::string& section) {
    GridSpec spec;
    spec.tech = cfg.str(section + ".tech");
    spec.d_out = SweepAxis::parse(cfg.str(section + ".d_out"));
    spec.w_p = SweepAxis::parse(cfg.str(section + ".w_p"));
    spec.w_s = SweepAxis::parse(cfg.str(section + ".w_s"));
    spec.c1 = SweepAxis::parse(cfg.str(section + ".c1"));
    spec.c2 = SweepAxis::parse(cfg.str(section + ".c2"));
    spec.validate();
    return spec;
}

GridSpec GridSpec::with_tech(const std::string& tech_name) const {
    GridSpec s = *this;
    s.tech = tech_name;
    return s;
}

const SplitIndices& GridDataset::split_ref() const {
    if (!split) throw std::logic_error("dataset has no split assigned");
    return *split;
}

const NormStats& GridDataset::norm_ref() const {
    if (!norm) throw std::logic_error("dataset has no normalization statistics");
    return *norm;
}

bool GridDataset::operator==(const GridDataset& o) const {
    return spec.describe() == o.spec.describe() && data == o.data && split == o.split &&
           norm == o.norm && split_seed == o.split_seed && subsample_seed == o.subsample_seed &&
           density == o.density;
}

GridDataset generate_grid(const GridSpec& spec, const TechnologyProfile& tech) {
    spec.validate();
    tech.validate();
    if (spec.tech != tech.name)
        throw std::invalid_argument("grid spec expects technology '" + spec.tech + "', got '" +
                                    tech.name + "'");
    GridDataset ds;
    ds.spec = spec;
    const std::uint64_t n = spec.total_points();
    ds.data.resize(n * kNumCols);

    const std::uint64_t caps_per_geom =
        static_cast<std::uint64_t>(spec.c1.steps) * spec.c2.steps;
    const std::int64_t n_geom = static_cast<std::int64_t>(spec.geometry_points());

    // Rows are written to pre-assigned indices, so the output is identical
    // for any number of workers.
#pragma omp parallel for schedule(static)
    for (std::int64_t gi = 0; gi < n_geom; ++gi) {
        const int i0 = static_cast<int>(gi / (spec.w_p.steps * spec.w_s.steps));
        const int rem = static_cast<int>(gi % (spec.w_p.steps * spec.w_s.steps));
        const int i1 = rem / spec.w_s.steps;
        const int i2 = rem % spec.w_s.steps;
        const Geometry g{spec.d_out.value(i0), spec.w_p.value(i1), spec.w_s.value(i2)};
        const CircuitParams y = geometry_to_circuit(g, tech);
        std::uint64_t r = static_cast<std::uint64_t>(gi) * caps_per_geom;
        for (int i3 = 0; i3 < spec.c1.steps; ++i3) {
            for (int i4 = 0; i4 < spec.c2.steps; ++i4, ++r) {
                const TuningCaps caps{spec.c1.value(i3), spec.c2.value(i4)};
                const DesignImpedance z = input_impedance(y, caps, tech);
                double* row = ds.data.data() + r * kNumCols;
                row[0] = caps.c1;
                row[1] = caps.c2;
                row[2] = z.re;
                row[3] = z.im;
                row[4] = y.l_p;
                row[5] = y.l_s;
                row[6] = y.k;
                row[7] = y.q_p;
                row[8] = y.q_s;
                row[9] = g.d_out;
                row[10] = g.w_p;
                row[11] = g.w_s;
            }
        }
    }
    return ds;
}

void assign_split(GridDataset& ds, std::uint64_t seed) {
    const std::uint64_t n = ds.rows();
    if (n < 5) throw std::invalid_argument("dataset too small to split 6:2:2 (need >= 5 rows)");
    std::vector<std::uint64_t> perm(n);
    for (std::uint64_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(mix_seed(seed, 1));
    rng.shuffle(perm);
    const auto n_train = static_cast<std::uint64_t>(std::llround(0.6 * static_cast<double>(n)));
    const auto n_val = static_cast<std::uint64_t>(std::llround(0.2 * static_cast<double>(n)));
    SplitIndices s;
    s.train.assign(perm.begin(), perm.begin() + n_train);
    s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    s.test.assign(perm.begin() + n_train + n_val, perm.end());
    ds.split = std::move(s);
    ds.split_seed = seed;
    ds.density = 1.0;
}

void compute_norm_stats(GridDataset& ds) {
    const auto& train = ds.split_ref().train;
    if (train.empty()) throw std::logic_error("empty train split");
    NormStats st;
    const double inv_n = 1.0 / static_cast<double>(train.size());
    for (int c = 0; c < kNumCols; ++c) {
        double mean = 0;
        for (std::uint64_t r : train) mean += ds.at(r, c);
        mean *= inv_n;
        double var = 0;
        for (std::uint64_t r : train) {
            const double d = ds.at(r, c) - mean;
            var += d * d;
        }
        var *= inv_n;
        if (!(var > 0))
            throw std::runtime_error(std::string("zero-variance column in train split: ") +
                                     kColumnNames[c]);
        st.mean[c] = mean;
        st.stddev[c] = std::sqrt(var);
    }
    ds.norm = st;
}

void subsample_train(GridDataset& ds, double density, std::uint64_t seed) {
    if (!(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("density must be in (0, 1]");
    if (!ds.split) throw std::logic_error("dataset has no split assigned");
    auto& split = *ds.split;
    ds.subsample_seed = seed;
    ds.density = density;
    const auto keep = static_cast<std::size_t>(
        std::ceil(density * static_cast<double>(split.train.size())));
    if (keep == split.train.size()) return;  // density 1.0 keeps the split as-is
    std::vector<std::uint64_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, 2));
    rng.shuffle(order);
    std::vector<std::uint64_t> retained(keep);
    for (std::size_t i = 0; i < keep; ++i) retained[i] = split.train[order[i]];
    split.train = std::move(retained);
}

namespace {
constexpr char kGridMagic[4] = {'X', 'G', 'R', 'D'};
constexpr std::uint32_t kGridVersion = 1;
}  // namespace

void save_dataset(const GridDataset& ds, const std::string& path) {
    BinaryWriter w(path);
    w.bytes(kGridMagic, 4);
    w.u32(kGridVersion);
    w.u64(kNumCols);
    for (const char* name : kColumnNames) w.str(name);
    w.u64(ds.rows());

    // metadata block
    std::ostringstream meta;
    meta << "tech=" << ds.spec.tech << "\n"
         << "d_out=" << ds.spec.d_out.to_string() << "\n"
         << "w_p=" << ds.spec.w_p.to_string() << "\n"
         << "w_s=" << ds.spec.w_s.to_string() << "\n"
         << "c1=" << ds.spec.c1.to_string() << "\n"
         << "c2=" << ds.spec.c2.to_string() << "\n"
         << "split_seed=" << ds.split_seed << "\n"
         << "subsample_seed=" << ds.subsample_seed << "\n";
    {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", ds.density);
        meta << "density=" << buf << "\n";
    }
    w.str(meta.str());

    w.u8(ds.norm.has_value() ? 1 : 0);
    if (ds.norm) {
        w.f64_array(ds.norm->mean.data(), kNumCols);
        w.f64_array(ds.norm->stddev.data(), kNumCols);
    }
    w.u8(ds.split.has_value() ? 1 : 0);
    if (ds.split) {
        for (const auto* part : {&ds.split->train, &ds.split->val, &ds.split->test}) {
            w.u64(part->size());
            w.u64_array(part->data(), part->size());
        }
    }
    w.f64_array(ds.data.data(), ds.data.size());
    w.write_checksum();
}

GridDataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    r.verify_checksum();
    r.expect_magic(kGridMagic, "dataset");
    if (r.u32() != kGridVersion) throw FileFormatError("unsupported dataset version: " + path);
    const std::uint64_t ncols = r.u64();
    if (ncols != kNumCols) throw FileFormatError("unexpected column count: " + path);
    for (int c = 0; c < kNumCols; ++c) {
        if (r.str() != kColumnNames[c])
            throw FileFormatError("unexpected column names: " + path);
    }
    const std::uint64_t nrows = r.u64();

    GridDataset ds;
    const Config meta = Config::parse_string(r.str(), path + "#meta");
    ds.spec.tech = meta.str("tech");
    ds.spec.d_out = SweepAxis::parse(meta.str("d_out"));
    ds.spec.w_p = SweepAxis::parse(meta.str("w_p"));
    ds.spec.w_s = SweepAxis::parse(meta.str("w_s"));
    ds.spec.c1 = SweepAxis::parse(meta.str("c1"));
    ds.spec.c2 = SweepAxis::parse(meta.str("c2"));
    ds.split_seed = static_cast<std::uint64_t>(meta.integer("split_seed"));
    ds.subsample_seed = static_cast<std::uint64_t>(meta.integer("subsample_seed"));
    ds.density = meta.number("density");

    if (r.u8()) {
        NormStats st;
        r.f64_array(st.mean.data(), kNumCols);
        r.f64_array(st.stddev.data(), kNumCols);
        ds.norm = st;
    }
    if (r.u8()) {
        SplitIndices s;
        for (auto* part : {&s.train, &s.val, &s.test}) {
            part->resize(r.u64());
            r.u64_array(part->data(), part->size());
        }
        ds.split = std::move(s);
    }
    ds.data.resize(nrows * kNumCols);
    r.f64_array(ds.data.data(), ds.data.size());
    return ds;
}

void export_csv(const GridDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open CSV for writing: " + path);
    for (int c = 0; c < kNumCols; ++c) out << kColumnNames[c] << ",";
    out << "split\n";

    std::vector<char> tag(ds.rows(), '-');
    if (ds.split) {
        for (std::uint64_t r : ds.split->train) tag[r] = 't';
        for (std::uint64_t r : ds.split->val) tag[r] = 'v';
        for (std::uint64_t r : ds.split->test) tag[r] = 'e';
    }
    char buf[40];
    for (std::uint64_t r = 0; r < ds.rows(); ++r) {
        for (int c = 0; c < kNumCols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.at(r, c));
            out << buf << ',';
        }
        switch (tag[r]) {
            case 't': out << "train\n"; break;
            case 'v': out << "val\n"; break;
            case 'e': out << "test\n"; break;
            default: out << "unsplit\n"; break;
        }
    }
    if (!out) throw std::runtime_error("CSV write failed: " + path);
}

}  // namespace xfmr
