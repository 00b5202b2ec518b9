#include "latentprog/risk.hpp"

#include "latentprog/adam.hpp"
#include "latentprog/csv.hpp"
#include "latentprog/error.hpp"
#include "latentprog/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace lp::risk {

void validate(const ProbabilityVector& p) {
    double total = 0.0;
    for (double v : p) {
        require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::InvalidProbability,
                "probability entry outside [0,1]");
        total += v;
    }
    require(std::abs(total - 1.0) <= 1e-6, ErrorKind::InvalidProbability,
            "probabilities sum to " + std::to_string(total) + ", not 1");
}

namespace {

void check_grade(int g) {
    require(g >= 0 && g < kGrades, ErrorKind::InvalidGrade, "grade " + std::to_string(g) + " is outside 0-4");
}

} // namespace

bool progression_label(int kls_baseline, int kls_followup) {
    check_grade(kls_baseline);
    check_grade(kls_followup);
    return kls_followup - kls_baseline > 1;
}

RiskScore progression_risk(const ProbabilityVector& p_baseline, const ProbabilityVector& p_followup) {
    validate(p_baseline);
    validate(p_followup);
    double progress = 0.0;
    double stable = 0.0;
    for (int ci = 0; ci < kGrades; ++ci)
        for (int cj = 0; cj < kGrades; ++cj) {
            const double joint = p_baseline[static_cast<std::size_t>(ci)] * p_followup[static_cast<std::size_t>(cj)];
            (cj - ci > 1 ? progress : stable) += joint;
        }
    // Renormalise so the two parts sum to one despite the 1e-6 input slack.
    const double total = progress + stable;
    return {progress / total, stable / total};
}

std::vector<double> risk_trajectory(const ProbabilityVector& p_baseline,
                                    std::span<const ProbabilityVector> followups) {
    require(!followups.empty(), ErrorKind::EmptyFollowups, "risk trajectory needs at least one follow-up");
    std::vector<double> out;
    out.reserve(followups.size());
    for (const auto& p : followups) out.push_back(progression_risk(p_baseline, p).p_progress);
    return out;
}

bool pain_label(double koos) {
    require(std::isfinite(koos), ErrorKind::InvalidArgument, "KOOS must be finite");
    return koos <= kPainKoosThreshold;
}

// ----------------------------------------------------------------------------
// Latent probe

int task_classes(ProbeTask task) noexcept { return task == ProbeTask::Kls ? kGrades : 2; }

LatentProbe zero_probe(ProbeTask task, int input_dim, int hidden) {
    require(input_dim > 0 && hidden > 0, ErrorKind::InvalidArgument, "probe sizes must be positive");
    LatentProbe p;
    p.task = task;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.classes = task_classes(task);
    p.input_mean.assign(static_cast<std::size_t>(input_dim), 0.0);
    p.input_scale.assign(static_cast<std::size_t>(input_dim), 1.0);
    p.w1 = ad::Tensor({input_dim, hidden});
    p.b1 = ad::Tensor({1, hidden});
    p.w2 = ad::Tensor({hidden, p.classes});
    p.b2 = ad::Tensor({1, p.classes});
    return p;
}

namespace {

ad::Var probe_logits(const std::vector<ad::Var>& weights, const ad::Var& x) {
    const int n = x.shape()[0];
    const ad::Var ones = ad::constant(ad::Tensor({n, 1}, 1.0));
    ad::Var h = ad::add(ad::matmul(x, weights[0]), ad::matmul(ones, weights[1]));
    h = ad::leaky_relu(h, 0.0);
    return ad::add(ad::matmul(h, weights[2]), ad::matmul(ones, weights[3]));
}

ad::Tensor standardised_batch(const LatentProbe& p, std::span<const std::vector<double>> latents,
                              std::span<const std::size_t> rows) {
    const auto d = static_cast<std::size_t>(p.input_dim);
    ad::Tensor x({static_cast<int>(rows.size()), p.input_dim});
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < d; ++j)
            x.data[r * d + j] = (latents[rows[r]][j] - p.input_mean[j]) / p.input_scale[j];
    return x;
}

double batch_loss(const LatentProbe& p, std::span<const std::vector<double>> latents, std::span<const int> labels,
                  std::span<const std::size_t> rows) {
    ad::NoGradGuard no_grad;
    std::vector<int> y;
    for (std::size_t r : rows) y.push_back(labels[r]);
    const std::vector<ad::Var> weights{ad::constant(p.w1), ad::constant(p.b1), ad::constant(p.w2),
                                       ad::constant(p.b2)};
    return ad::softmax_cross_entropy(probe_logits(weights, ad::constant(standardised_batch(p, latents, rows))), y)
        .item();
}

} // namespace

LatentProbe train_latent_probe(std::span<const std::vector<double>> latents, std::span<const int> labels,
                               ProbeTask task, const ProbeConfig& cfg) {
    require(latents.size() == labels.size(), ErrorKind::LengthMismatch,
            std::to_string(latents.size()) + " latents but " + std::to_string(labels.size()) + " labels");
    require(latents.size() >= 2, ErrorKind::InsufficientData, "probe training needs at least two samples");
    require(cfg.hidden > 0 && cfg.epochs >= 0 && cfg.batch_size > 0 && cfg.learning_rate > 0.0 &&
                cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0,
            ErrorKind::InvalidArgument, "invalid probe configuration");
    for (int y : labels) {
        if (task == ProbeTask::Kls)
            check_grade(y);
        else
            require(y == 0 || y == 1, ErrorKind::InvalidArgument, "pain labels must be 0 or 1");
    }
    require(std::set<int>(labels.begin(), labels.end()).size() >= 2, ErrorKind::DegenerateLabels,
            "probe labels contain a single class");
    const std::size_t d = latents.front().size();
    require(d > 0, ErrorKind::DimensionMismatch, "latents are empty");
    for (const auto& w : latents) require(w.size() == d, ErrorKind::DimensionMismatch, "latents differ in dimension");

    Rng rng(cfg.seed, 0x50524f4245);
    LatentProbe p = zero_probe(task, static_cast<int>(d), cfg.hidden);

    // Seeded train / validation split.
    std::vector<std::size_t> order(latents.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(order.size())));
    n_val = std::min(n_val, order.size() - 1);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t r : train) mean += latents[r][j];
        mean /= static_cast<double>(train.size());
        double var = 0.0;
        for (std::size_t r : train) var += (latents[r][j] - mean) * (latents[r][j] - mean);
        const double sd = std::sqrt(var / static_cast<double>(train.size()));
        p.input_mean[j] = mean;
        p.input_scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    const double sd1 = std::sqrt(2.0 / static_cast<double>(d));
    for (double& v : p.w1.data) v = rng.normal(0.0, sd1);
    const double sd2 = std::sqrt(1.0 / cfg.hidden);
    for (double& v : p.w2.data) v = rng.normal(0.0, sd2);

    std::vector<ad::Tensor> params{p.w1, p.b1, p.w2, p.b2};
    AdamState adam(params);
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.below(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train.size(); start += batch) {
            const std::size_t end = std::min(train.size(), start + batch);
            const std::span<const std::size_t> rows(train.data() + start, end - start);
            std::vector<int> y;
            for (std::size_t r : rows) y.push_back(labels[r]);
            const auto weights = std::vector<ad::Var>{ad::parameter(params[0]), ad::parameter(params[1]),
                                                      ad::parameter(params[2]), ad::parameter(params[3])};
            const ad::Var loss =
                ad::softmax_cross_entropy(probe_logits(weights, ad::constant(standardised_batch(p, latents, rows))), y);
            require(std::isfinite(loss.item()), ErrorKind::NonFiniteLoss, "probe loss became non-finite");
            epoch_loss += loss.item() * static_cast<double>(rows.size());
            const auto grads = ad::grad(loss, weights);
            std::vector<ad::Tensor> g;
            for (const auto& v : grads) g.push_back(v.value());
            adam_step(adam, params, g, cfg.learning_rate);
        }
        p.w1 = params[0];
        p.b1 = params[1];
        p.w2 = params[2];
        p.b2 = params[3];
        p.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
        if (!val.empty()) p.validation_loss.push_back(batch_loss(p, latents, labels, val));
    }
    return p;
}

std::vector<double> probe_predict(const LatentProbe& p, std::span<const double> w) {
    require(w.size() == static_cast<std::size_t>(p.input_dim), ErrorKind::DimensionMismatch,
            "probe expects dimension " + std::to_string(p.input_dim) + ", got " + std::to_string(w.size()));
    const auto h_n = static_cast<std::size_t>(p.hidden);
    const auto k = static_cast<std::size_t>(p.classes);
    const auto d = static_cast<std::size_t>(p.input_dim);
    std::vector<double> x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = (w[j] - p.input_mean[j]) / p.input_scale[j];
    std::vector<double> h(h_n);
    for (std::size_t u = 0; u < h_n; ++u) {
        double s = p.b1.data[u];
        for (std::size_t j = 0; j < d; ++j) s += x[j] * p.w1.data[j * h_n + u];
        h[u] = std::max(0.0, s);
    }
    std::vector<double> logits(k);
    for (std::size_t c = 0; c < k; ++c) {
        double s = p.b2.data[c];
        for (std::size_t u = 0; u < h_n; ++u) s += h[u] * p.w2.data[u * k + c];
        logits[c] = s;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double& z : logits) denom += (z = std::exp(z - peak));
    for (double& z : logits) z /= denom;
    return logits;
}

ProbabilityVector probe_predict_grades(const LatentProbe& probe, const LatentVector& w) {
    require(probe.classes == kGrades, ErrorKind::InvalidArgument, "probe was not trained on grades");
    const auto probs = probe_predict(probe, w.as_doubles());
    ProbabilityVector out{};
    std::copy(probs.begin(), probs.end(), out.begin());
    return out;
}

// ----------------------------------------------------------------------------
// Probability CSV

ProbabilityTable parse_probability_csv(const std::string& text) {
    const csv::Table t = csv::parse(text);
    const std::size_t c_id = t.column("subject_id");
    const std::size_t c_side = t.column("side");
    const std::size_t c_month = t.column("visit_month");
    std::array<std::size_t, kGrades> c_p{};
    for (int g = 0; g < kGrades; ++g) c_p[static_cast<std::size_t>(g)] = t.column("p" + std::to_string(g));
    ProbabilityTable out;
    for (const auto& row : t.rows) {
        VisitKey key{{row.at(c_id), parse_side(row.at(c_side))},
                     static_cast<int>(csv::to_long(row.at(c_month), "visit_month"))};
        ProbabilityVector p{};
        for (std::size_t g = 0; g < kGrades; ++g) p[g] = csv::to_double(row.at(c_p[g]), "probability");
        validate(p);
        require(out.emplace(key, p).second, ErrorKind::DuplicateVisit,
                "duplicate visit " + to_string(key.knee) + " month " + std::to_string(key.visit_month));
    }
    return out;
}

ProbabilityTable read_probability_csv(const std::filesystem::path& path) {
    return parse_probability_csv(csv::read_text(path));
}

void write_probability_csv(const std::filesystem::path& path, const ProbabilityTable& table) {
    std::ostringstream os;
    os.precision(17);
    os << "subject_id,side,visit_month,p0,p1,p2,p3,p4\n";
    for (const auto& [key, p] : table) {
        os << key.knee.subject_id << ',' << side_name(key.knee.side) << ',' << key.visit_month;
        for (double v : p) os << ',' << v;
        os << '\n';
    }
    csv::write_text(path, os.str());
}

std::vector<KneeRisk> knee_risks(const ProbabilityTable& table, int baseline_month) {
    std::map<KneeKey, std::vector<std::pair<int, const ProbabilityVector*>>> by_knee;
    for (const auto& [key, p] : table) by_knee[key.knee].emplace_back(key.visit_month, &p);
    std::vector<KneeRisk> out;
    for (const auto& [knee, visits] : by_knee) {
        const auto base = std::find_if(visits.begin(), visits.end(),
                                       [&](const auto& v) { return v.first == baseline_month; });
        if (base == visits.end()) continue;
        KneeRisk r;
        r.key = knee;
        r.baseline_month = baseline_month;
        std::vector<ProbabilityVector> followups;
        for (const auto& [month, p] : visits)
            if (month > baseline_month) {
                r.followup_months.push_back(month);
                followups.push_back(*p);
            }
        if (followups.empty()) continue;
        r.p_progress = risk_trajectory(*base->second, followups);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace lp::risk
