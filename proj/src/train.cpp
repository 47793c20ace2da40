#include "xfmr/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "xfmr/binio.hpp"

namespace xfmr {

void TrainConfig::validate() const {
    if (!(tau >= 0)) throw std::invalid_argument("train config: tau must be >= 0");
    if (!(lr > 0)) throw std::invalid_argument("train config: lr must be > 0");
    if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be >= 2");
    if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
    if (hidden < 1) throw std::invalid_argument("train config: hidden must be >= 1");
}

TrainConfig TrainConfig::from_config(const Config& cfg, const std::string& section) {
    TrainConfig tc;
    const std::string p = section + ".";
    tc.tau = cfg.number(p + "tau", tc.tau);
    tc.lr = cfg.number(p + "lr", tc.lr);
    tc.weight_decay = cfg.number(p + "weight_decay", tc.weight_decay);
    tc.epochs = static_cast<int>(cfg.integer(p + "epochs", tc.epochs));
    tc.batch_size = static_cast<std::size_t>(cfg.integer(p + "batch_size",
                                                         static_cast<long long>(tc.batch_size)));
    tc.decay_factor = cfg.number(p + "decay_factor", tc.decay_factor);
    tc.decay_start_epoch = static_cast<int>(cfg.integer(p + "decay_start_epoch", tc.decay_start_epoch));
    tc.decay_every = static_cast<int>(cfg.integer(p + "decay_every", tc.decay_every));
    tc.seed = static_cast<std::uint64_t>(cfg.integer(p + "seed", 0));
    tc.hidden = static_cast<std::size_t>(cfg.integer(p + "hidden",
                                                     static_cast<long long>(tc.hidden)));
    tc.validate();
    return tc;
}

std::string TrainConfig::fingerprint() const {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "tau=%.17g;lr=%.17g;wd=%.17g;epochs=%d;batch=%zu;df=%.17g;ds=%d;de=%d;"
                  "seed=%llu;b1=%.17g;b2=%.17g;eps=%.17g;hidden=%zu",
                  tau, lr, weight_decay, epochs, batch_size, decay_factor, decay_start_epoch,
                  decay_every, static_cast<unsigned long long>(seed), beta1, beta2, adam_eps,
                  hidden);
    return buf;
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    int n = 0;
    if (epoch >= cfg.decay_start_epoch)
        n = (epoch - cfg.decay_start_epoch) / cfg.decay_every + 1;
    return cfg.lr * std::pow(cfg.decay_factor, n);
}

namespace {

// Gathers standardized columns [col0, col0+ncols) of the given rows as floats.
Mat<float> gather_standardized(const GridDataset& ds, const std::vector<std::uint64_t>& rows,
                               int col0, int ncols) {
    const NormStats& st = ds.norm_ref();
    Mat<float> out(rows.size(), ncols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < ncols; ++c)
            out[i][c] = static_cast<float>((ds.at(rows[i], col0 + c) - st.mean[col0 + c]) /
                                           st.stddev[col0 + c]);
    return out;
}

const std::vector<std::uint64_t>& split_rows(const GridDataset& ds, const std::string& split) {
    const SplitIndices& s = ds.split_ref();
    if (split == "train") return s.train;
    if (split == "val") return s.val;
    if (split == "test") return s.test;
    throw std::invalid_argument("unknown split: " + split);
}

// De-standardized physical predictions against raw targets.
double val_r2(const SynthesisModel<float>& model, const Mat<float>& x_std,
              const std::vector<double>& v_raw) {
    if (x_std.rows < 2) return std::numeric_limits<double>::quiet_NaN();
    auto [y, v] = model_forward_eval(model, x_std);
    std::vector<double> pred(v.v.size());
    for (std::size_t i = 0; i < v.rows; ++i)
        for (int c = 0; c < kVCols; ++c)
            pred[i * kVCols + c] = static_cast<double>(v[i][c]) * model.norm.stddev[9 + c] +
                                   model.norm.mean[9 + c];
    return r_squared(pred, v_raw, v.rows, kVCols).mean;
}

std::vector<double> gather_raw(const GridDataset& ds, const std::vector<std::uint64_t>& rows,
                               int col0, int ncols) {
    std::vector<double> out(rows.size() * ncols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < ncols; ++c) out[i * ncols + c] = ds.at(rows[i], col0 + c);
    return out;
}

}  // namespace

TrainResult train(const GridDataset& ds, const TrainConfig& cfg,
                  const SynthesisModel<float>* init,
                  std::map<std::string, std::string> provenance) {
    cfg.validate();
    const NormStats& st = ds.norm_ref();
    const auto& train_rows = ds.split_ref().train;
    if (train_rows.size() < 2) throw std::invalid_argument("train split has fewer than 2 rows");

#ifdef _OPENMP
    omp_set_num_threads(cfg.threads > 0 ? cfg.threads : 1);
#endif

    TrainResult res;
    if (init != nullptr) {
        res.model = *init;
        const SynthesisModel<float> fresh = make_synthesis_model<float>(cfg.hidden, cfg.seed);
        if (architecture_descriptor(res.model) != architecture_descriptor(fresh))
            throw std::invalid_argument("checkpoint architecture mismatch: expected " +
                                        architecture_descriptor(fresh) + ", checkpoint has " +
                                        architecture_descriptor(res.model));
    } else {
        res.model = make_synthesis_model<float>(cfg.hidden, cfg.seed);
    }
    res.model.norm = st;  // standardization always follows the dataset being trained on

    std::size_t batch = cfg.batch_size;
    if (batch > train_rows.size()) {
        batch = train_rows.size();
        res.warnings.push_back("batch_size clamped to train split size " +
                               std::to_string(batch));
    }

    const Mat<float> x_tr = gather_standardized(ds, train_rows, 0, kXCols);
    const Mat<float> y_tr = gather_standardized(ds, train_rows, kXCols, kYCols);
    const Mat<float> v_tr = gather_standardized(ds, train_rows, kXCols + kYCols, kVCols);
    const Mat<float> x_val = gather_standardized(ds, ds.split_ref().val, 0, kXCols);
    const std::vector<double> v_val_raw = gather_raw(ds, ds.split_ref().val, 9, kVCols);

    auto params_f = parameters(res.model.circuit);
    auto params_g = parameters(res.model.physical);
    std::vector<std::span<float>> all_params = params_f;
    all_params.insert(all_params.end(), params_g.begin(), params_g.end());
    AdamState<float> adam = AdamState<float>::init_for(all_params);

    GradTensors<float> grads_f = make_grad_tensors(res.model.circuit);
    GradTensors<float> grads_g = make_grad_tensors(res.model.physical);

    const std::size_t n = train_rows.size();
    std::vector<std::uint64_t> order(n);
    Mat<float> xb, yb, vb;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_schedule(epoch, cfg);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0;
        std::size_t seen = 0;
        for (std::size_t b0 = 0; b0 < n; b0 += batch) {
            const std::size_t bsz = std::min(batch, n - b0);
            if (bsz < 2) continue;  // batch norm is undefined on a single row
            xb = Mat<float>(bsz, kXCols);
            yb = Mat<float>(bsz, kYCols);
            vb = Mat<float>(bsz, kVCols);
            for (std::size_t i = 0; i < bsz; ++i) {
                const std::size_t r = order[b0 + i];
                std::copy(x_tr[r], x_tr[r] + kXCols, xb[i]);
                std::copy(y_tr[r], y_tr[r] + kYCols, yb[i]);
                std::copy(v_tr[r], v_tr[r] + kVCols, vb[i]);
            }
            for (auto& g : grads_f) std::fill(g.begin(), g.end(), 0.f);
            for (auto& g : grads_g) std::fill(g.begin(), g.end(), 0.f);
            const float loss = model_loss_backward(res.model, xb, yb, vb,
                                                   static_cast<float>(cfg.tau), grads_f, grads_g);
            GradTensors<float> all_grads = grads_f;
            all_grads.insert(all_grads.end(), grads_g.begin(), grads_g.end());
            adam_step(all_params, all_grads, adam, static_cast<float>(lr),
                      static_cast<float>(cfg.weight_decay), static_cast<float>(cfg.beta1),
                      static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
            loss_sum += static_cast<double>(loss) * static_cast<double>(bsz);
            seen += bsz;
        }
        EpochStat stat;
        stat.epoch = epoch;
        stat.lr = lr;
        stat.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
        stat.val_r2 = val_r2(res.model, x_val, v_val_raw);
        res.history.push_back(stat);
    }

    res.provenance = std::move(provenance);
    res.provenance["config"] = cfg.fingerprint();
    res.provenance["seed"] = std::to_string(cfg.seed);
    res.provenance["tech"] = ds.spec.tech;
    res.provenance["grid"] = ds.spec.describe();
    return res;
}

R2Report evaluate(const SynthesisModel<float>& model, const GridDataset& ds,
                  const std::string& split) {
    const auto& rows = split_rows(ds, split);
    if (rows.size() < 2) throw std::invalid_argument("split too small to evaluate: " + split);
    // inputs standardized with the CHECKPOINT's stats (its training-time view)
    Mat<float> x(rows.size(), kXCols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < kXCols; ++c)
            x[i][c] = static_cast<float>((ds.at(rows[i], c) - model.norm.mean[c]) /
                                         model.norm.stddev[c]);
    auto [y, v] = model_forward_eval(model, x);
    std::vector<double> pred(v.v.size());
    for (std::size_t i = 0; i < v.rows; ++i)
        for (int c = 0; c < kVCols; ++c)
            pred[i * kVCols + c] = static_cast<double>(v[i][c]) * model.norm.stddev[9 + c] +
                                   model.norm.mean[9 + c];
    const std::vector<double> target = gather_raw(ds, rows, 9, kVCols);
    R2Report rep = r_squared(pred, target, rows.size(), kVCols);
    rep.split = split;
    return rep;
}

namespace {

constexpr char kCkptMagic[4] = {'X', 'C', 'K', 'P'};
constexpr std::uint32_t kCkptVersion = 1;

void write_stack(BinaryWriter& w, const LayerStack<float>& stack) {
    w.u64(stack.in_dim);
    w.u64(stack.out_dim);
    w.u64(stack.layers.size());
    for (const auto& layer : stack.layers) {
        if (const auto* lin = std::get_if<LinearLayer<float>>(&layer)) {
            w.u8(0);
            w.u64(lin->in);
            w.u64(lin->out);
            // weights serialized in the logical (out x in) layout
            for (std::size_t o = 0; o < lin->out; ++o)
                for (std::size_t i = 0; i < lin->in; ++i) w.f32(lin->wt[i][o]);
            w.f32_array(lin->bias.data(), lin->bias.size());
        } else if (const auto* bn = std::get_if<BatchNormLayer<float>>(&layer)) {
            w.u8(1);
            w.u64(bn->dim);
            w.f32(bn->momentum);
            w.f32(bn->eps);
            w.f32_array(bn->gamma.data(), bn->dim);
            w.f32_array(bn->beta.data(), bn->dim);
            w.f32_array(bn->run_mean.data(), bn->dim);
            w.f32_array(bn->run_var.data(), bn->dim);
        } else {
            w.u8(2);
        }
    }
}

LayerStack<float> read_stack(BinaryReader& r, const std::string& path) {
    LayerStack<float> stack;
    stack.in_dim = r.u64();
    stack.out_dim = r.u64();
    const std::uint64_t nl = r.u64();
    for (std::uint64_t li = 0; li < nl; ++li) {
        switch (r.u8()) {
            case 0: {
                LinearLayer<float> lin;
                lin.in = r.u64();
                lin.out = r.u64();
                lin.wt = Mat<float>(lin.in, lin.out);
                for (std::size_t o = 0; o < lin.out; ++o)
                    for (std::size_t i = 0; i < lin.in; ++i) lin.wt[i][o] = r.f32();
                lin.bias.resize(lin.out);
                r.f32_array(lin.bias.data(), lin.out);
                stack.layers.emplace_back(std::move(lin));
                break;
            }
            case 1: {
                BatchNormLayer<float> bn;
                bn.dim = r.u64();
                bn.momentum = r.f32();
                bn.eps = r.f32();
                bn.gamma.resize(bn.dim);
                bn.beta.resize(bn.dim);
                bn.run_mean.resize(bn.dim);
                bn.run_var.resize(bn.dim);
                r.f32_array(bn.gamma.data(), bn.dim);
                r.f32_array(bn.beta.data(), bn.dim);
                r.f32_array(bn.run_mean.data(), bn.dim);
                r.f32_array(bn.run_var.data(), bn.dim);
                stack.layers.emplace_back(std::move(bn));
                break;
            }
            case 2:
                stack.layers.emplace_back(ReluLayer{});
                break;
            default:
                throw FileFormatError("unknown layer kind in checkpoint: " + path);
        }
    }
    return stack;
}

}  // namespace

void save_checkpoint(const SynthesisModel<float>& model,
                     const std::map<std::string, std::string>& meta, const std::string& path) {
    BinaryWriter w(path);
    w.bytes(kCkptMagic, 4);
    w.u32(kCkptVersion);
    w.u64(model.hidden);
    write_stack(w, model.circuit);
    write_stack(w, model.physical);
    w.f64_array(model.norm.mean.data(), kNumCols);
    w.f64_array(model.norm.stddev.data(), kNumCols);
    std::ostringstream meta_text;
    for (const auto& [key, value] : meta) meta_text << key << " = " << value << "\n";
    w.str(meta_text.str());
    w.write_checksum();
}

std::pair<SynthesisModel<float>, std::map<std::string, std::string>> load_checkpoint(
    const std::string& path) {
    BinaryReader r(path);
    r.verify_checksum();
    r.expect_magic(kCkptMagic, "checkpoint");
    if (r.u32() != kCkptVersion) throw FileFormatError("unsupported checkpoint version: " + path);
    SynthesisModel<float> model;
    model.hidden = r.u64();
    model.circuit = read_stack(r, path);
    model.physical = read_stack(r, path);
    r.f64_array(model.norm.mean.data(), kNumCols);
    r.f64_array(model.norm.stddev.data(), kNumCols);
    std::map<std::string, std::string> meta;
    const Config meta_cfg = Config::parse_string(r.str(), path + "#meta");
    for (const std::string& key : meta_cfg.all_keys()) meta[key] = meta_cfg.raw(key);
    return {std::move(model), meta};
}

void write_history_csv(const std::vector<EpochStat>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open history file: " + path);
    out << "epoch,lr,train_loss,val_r2\n";
    char buf[128];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g\n", h.epoch, h.lr, h.train_loss,
                      h.val_r2);
        out << buf;
    }
    if (!out) throw std::runtime_error("history write failed: " + path);
}

}  // namespace xfmr
