#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "edit_suggest/cgm_vae.hpp"
#include "edit_suggest/rng.hpp"
#include "model_oracle.hpp"
#include "tiny_model.hpp"

using namespace edit_suggest;
using fixture::bimodal_records;
using fixture::trained_tiny_model;

namespace {

ModelConfig tiny_config(std::size_t components, std::size_t latent = 1)
{
    ModelConfig c;
    c.x_dim = 2;
    c.y_dim = 2;
    c.latent_dim = latent;
    c.components = components;
    c.hidden = {8};
    return c;
}

std::vector<ImageEditRecord> random_records(std::size_t n, std::uint64_t seed, std::size_t dx = 2,
                                            std::size_t dy = 2)
{
    Rng rng(seed);
    std::vector<ImageEditRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        ImageEditRecord r;
        r.user_id = static_cast<std::int64_t>(i % 5);
        for (std::size_t d = 0; d < dx; ++d) {
            r.x.push_back(rng.normal());
        }
        for (std::size_t d = 0; d < dy; ++d) {
            r.y.push_back(2.0 * rng.uniform() - 1.0);
        }
        out.push_back(r);
    }
    return out;
}

void zero(Tensor& t)
{
    std::fill(t.storage().begin(), t.storage().end(), 0.0);
}

// Marginalized ELBO for one record computed without the graph code.
double oracle_elbo(const CgmVaeModel& m, const ImageEditRecord& r, const NoiseSource& noise)
{
    const auto L = m.config.components;
    const auto pr = oracle::prior(m.prior);
    const auto log_qs = oracle::log_softmax(oracle::mlp(m.recog_s, oracle::concat(r.x, r.y)));
    double total = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
        const auto eps = noise.draw(r.content_hash(), k, m.config.latent_dim);
        const double term = oracle::component_term(m.decoder, m.recog_z, pr, k, r.x, r.y, eps) +
                            pr.log_weights[k] - log_qs[k];
        total += std::exp(log_qs[k]) * term;
    }
    return total;
}

// Model whose decoder ignores z and whose recognition net returns the prior N(0, I).
CgmVaeModel z_blind_model()
{
    auto m = CgmVaeModel::init(tiny_config(1, 2), 4);
    zero(m.prior.means);
    zero(m.prior.log_vars);
    for (auto& w : m.recog_z.weights) {
        zero(w);
    }
    for (auto& b : m.recog_z.biases) {
        zero(b);
    }
    auto& w0 = m.decoder.weights[0];
    for (std::size_t i = 0; i < m.config.latent_dim; ++i) {
        for (std::size_t j = 0; j < w0.cols(); ++j) {
            w0(i, j) = 0.0;
        }
    }
    return m;
}

// The single-sample ELBO averaged over independent noise draws, with its standard error.
oracle::Estimate mean_elbo(const CgmVaeModel& m, const ImageEditRecord& r, std::size_t draws)
{
    const std::vector<ImageEditRecord> one{r};
    std::vector<double> values;
    for (std::size_t i = 0; i < draws; ++i) {
        values.push_back(elbo(one, m, NoiseSource(derive_seed(r.content_hash(), "elbo-draw", i))));
    }
    return oracle::mean_and_se(values);
}

}  // namespace

TEST(CgmVaeElbo, MatchesIndependentImplementation)
{
    for (std::size_t L : {1u, 3u}) {
        const auto m = CgmVaeModel::init(tiny_config(L, 2), 11);
        const auto records = random_records(7, 3);
        const NoiseSource noise(99);
        double expected = 0.0;
        for (const auto& r : records) {
            expected += oracle_elbo(m, r, noise);
        }
        expected /= static_cast<double>(records.size());
        EXPECT_NEAR(elbo(records, m, noise), expected, 1e-10) << "L=" << L;
    }
}

TEST(CgmVaeElbo, SingleComponentIsConditionalVaeElbo)
{
    const auto m = CgmVaeModel::init(tiny_config(1, 2), 5);
    const auto records = random_records(4, 8);
    const NoiseSource noise(1);
    const auto pr = oracle::prior(m.prior);
    double expected = 0.0;
    for (const auto& r : records) {
        const auto q = oracle::gaussian_head(m.recog_z, oracle::concat(oracle::concat(r.x, r.y), {1.0}));
        const auto eps = noise.draw(r.content_hash(), 0, 2);
        std::vector<double> z{q.mean[0] + std::exp(0.5 * q.log_var[0]) * eps[0],
                              q.mean[1] + std::exp(0.5 * q.log_var[1]) * eps[1]};
        expected += oracle::decoder_ll(m.decoder, z, r.x, r.y) + oracle::log_gauss(z, pr.comps[0]) -
                    oracle::log_gauss(z, q);
    }
    EXPECT_NEAR(elbo(records, m, noise), expected / 4.0, 1e-10);
}

TEST(CgmVaeElbo, BlindDecoderGivesExactLikelihood)
{
    const auto m = z_blind_model();
    const auto records = random_records(5, 2);
    const NoiseSource noise(7);
    for (const auto& r : records) {
        const std::vector<ImageEditRecord> one{r};
        const double exact = oracle::decoder_ll(m.decoder, {0.0, 0.0}, r.x, r.y);
        EXPECT_NEAR(elbo(one, m, noise), exact, 1e-10);
        for (std::size_t S : {1u, 10u, 1000u}) {
            const auto est = predictive_loglik(r.x, r.y, m, S, 3);
            EXPECT_NEAR(est.value, exact, 1e-10);
            EXPECT_NEAR(est.std_error, 0.0, 1e-10);
        }
    }
}

TEST(CgmVaeElbo, GradientsMatchFiniteDifferences)
{
    auto m = CgmVaeModel::init(tiny_config(2, 1), 21);
    const auto records = random_records(3, 4);
    const auto batch = make_batch(std::span<const ImageEditRecord>(records));
    const NoiseSource noise(5);
    ad::Graph g;
    const auto grads = g.backward(ad::mean(elbo_graph(g, m, batch, noise)));
    auto value = [&] { return elbo(records, m, noise); };
    for (const auto& p : m.named_parameters()) {
        const auto fd = oracle::fd_gradient(value, *p.tensor);
        const auto& an = grads.at(p.tensor);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            EXPECT_LE(oracle::rel_err(an[i], fd[i]), 1e-4) << p.name << "[" << i << "]";
        }
    }
}

TEST(CgmVaeElbo, SingleSampleClusterIsUnbiased)
{
    const auto m = CgmVaeModel::init(tiny_config(3, 2), 13);
    const auto r = random_records(1, 6)[0];
    const NoiseSource noise(2);
    const auto pr = oracle::prior(m.prior);
    const auto log_qs = oracle::log_softmax(oracle::mlp(m.recog_s, oracle::concat(r.x, r.y)));
    std::vector<double> terms, probs;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto eps = noise.draw(r.content_hash(), k, 2);
        terms.push_back(oracle::component_term(m.decoder, m.recog_z, pr, k, r.x, r.y, eps) +
                        pr.log_weights[k] - log_qs[k]);
        probs.push_back(std::exp(log_qs[k]));
    }
    Rng rng(31);
    const int n = 10000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = terms[rng.categorical(probs)];
        sum += t;
        sq += t * t;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
    const std::vector<ImageEditRecord> one{r};
    EXPECT_LE(std::abs(mean - elbo(one, m, noise)), 3.0 * se);
}

TEST(CgmVaeElbo, IsBelowImportanceSampledLikelihood)
{
    const auto& m = trained_tiny_model();
    const auto records = bimodal_records(20, 12);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto est = predictive_loglik(records[i].x, records[i].y, m, 10000, i);
        const auto lb = mean_elbo(m, records[i], 1000);
        if (lb.mean > est.value + 3.0 * std::hypot(est.std_error, lb.se)) {
            ++violations;
        }
    }
    EXPECT_EQ(violations, 0u);
}

TEST(CgmVaeElbo, Errors)
{
    const auto m = CgmVaeModel::init(tiny_config(2), 1);
    EXPECT_THROW(elbo({}, m, NoiseSource(0)), ConfigError);
    const auto wrong = random_records(2, 1, 3, 2);
    EXPECT_THROW(elbo(wrong, m, NoiseSource(0)), ShapeError);
}

TEST(CgmVaePredictive, MatchesQuadrature)
{
    const auto& m = trained_tiny_model();
    const auto pr = oracle::prior(m.prior);
    for (const auto& r : bimodal_records(5, 31)) {
        std::vector<double> per_k;
        for (std::size_t k = 0; k < 2; ++k) {
            per_k.push_back(pr.log_weights[k] + oracle::component_ll_quadrature(m.decoder, pr.comps[k], r.x, r.y));
        }
        const double exact = oracle::logsumexp(per_k);
        EXPECT_NEAR(predictive_loglik(r.x, r.y, m, 10000, 1).value, exact, 0.01);
    }
}

TEST(CgmVaePredictive, MoreSamplesRaiseTheBound)
{
    const auto m = CgmVaeModel::init(tiny_config(2, 1), 29);
    const auto r = random_records(1, 40)[0];
    double s1 = 0.0, s100 = 0.0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        s1 += predictive_loglik(r.x, r.y, m, 1, rep).value;
        s100 += predictive_loglik(r.x, r.y, m, 100, rep).value;
    }
    EXPECT_LE(s1 / 100.0, s100 / 100.0);
}

TEST(CgmVaePredictive, Errors)
{
    const auto m = CgmVaeModel::init(tiny_config(2), 1);
    const std::vector<double> x{0.0, 0.0}, y{0.0, 0.0};
    EXPECT_THROW(predictive_loglik(x, y, m, 0, 1), ConfigError);
    EXPECT_THROW(predictive_loglik(std::vector<double>{0.0}, y, m, 10, 1), ShapeError);
}

TEST(CgmVaeTrain, GradientStepIncreasesElbo)
{
    const auto records = random_records(16, 77);
    const NoiseSource noise(3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto m = CgmVaeModel::init(tiny_config(3, 2), seed);
        const double before = elbo(records, m, noise);
        ad::Graph g;
        const auto grads =
            g.backward(ad::mean(elbo_graph(g, m, make_batch(std::span<const ImageEditRecord>(records)), noise)));
        for (auto* p : m.parameters()) {
            const auto& gr = grads.at(p);
            for (std::size_t i = 0; i < p->size(); ++i) {
                (*p)[i] += 1e-4 * gr[i];
            }
        }
        EXPECT_GT(elbo(records, m, noise), before) << "seed " << seed;
    }
}

TEST(CgmVaeTrain, ConstantDatasetRecoversTheSliders)
{
    std::vector<ImageEditRecord> records(64);
    for (auto& r : records) {
        r.x = {0.5, -0.5};
        r.y = {0.3, -0.2};
    }
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 4;
    cfg.latent_dim = 1;
    cfg.components = 2;
    cfg.hidden = {16};
    cfg.seed = 4;
    const auto result = train_cgm_vae(records, {}, cfg);
    for (const auto& p : propose_edits(records[0].x, 20, result.model, 1)) {
        EXPECT_NEAR(p[0], 0.3, 0.05);
        EXPECT_NEAR(p[1], -0.2, 0.05);
    }
}

TEST(CgmVaeTrain, DeterministicAndLogsEveryEpoch)
{
    const auto records = random_records(40, 5);
    const std::span<const ImageEditRecord> all(records);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.hidden = {8};
    cfg.seed = 12;
    std::size_t calls = 0;
    const auto a = train_cgm_vae(all.first(32), all.subspan(32), cfg, [&](const EpochLog&) { ++calls; });
    const auto b = train_cgm_vae(all.first(32), all.subspan(32), cfg);
    EXPECT_EQ(calls, 3u);
    ASSERT_EQ(a.log.size(), 3u);
    EXPECT_GE(a.best_epoch, 1u);
    EXPECT_LE(a.best_epoch, 3u);
    auto pa = const_cast<CgmVaeModel&>(a.model).named_parameters();
    auto pb = const_cast<CgmVaeModel&>(b.model).named_parameters();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_TRUE(std::ranges::equal(pa[i].tensor->data(), pb[i].tensor->data())) << pa[i].name;
    }
    EXPECT_THROW(train_cgm_vae({}, {}, cfg), ConfigError);
}

TEST(CgmVaePropose, ShapeAndDeterminism)
{
    const auto m = CgmVaeModel::init(tiny_config(3, 2), 2);
    const std::vector<double> x{0.1, 0.2};
    const auto one = propose_edits(x, 1, m, 5);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].size(), 2u);
    EXPECT_EQ(propose_edits(x, 20, m, 5), propose_edits(x, 20, m, 5));
    EXPECT_NE(propose_edits(x, 20, m, 5), propose_edits(x, 20, m, 6));
    EXPECT_THROW(propose_edits(x, 0, m, 5), ConfigError);
    EXPECT_THROW(propose_edits(std::vector<double>{1.0}, 3, m, 5), ShapeError);
}

TEST(CgmVaePropose, ConcentratesOnSeparatedModesWithPriorFrequencies)
{
    // Linear decoder mean = (z, -z); components at z = -5 and z = +5 with tiny variance.
    auto cfg = tiny_config(2, 1);
    cfg.hidden = {};
    auto m = CgmVaeModel::init(cfg, 3);
    auto& w = m.decoder.weights[0];
    zero(w);
    zero(m.decoder.biases[0]);
    w(0, 0) = 1.0;
    w(0, 1) = -1.0;
    m.prior.means(0, 0) = -5.0;
    m.prior.means(1, 0) = 5.0;
    m.prior.log_vars(0, 0) = -10.0;
    m.prior.log_vars(1, 0) = -10.0;
    m.prior.logits[0] = std::log(0.3);
    m.prior.logits[1] = std::log(0.7);

    const auto proposals = propose_edits(std::vector<double>{0.4, -0.9}, 10000, m, 8);
    std::size_t first = 0;
    for (const auto& p : proposals) {
        const bool is_first = p[0] < 0.0;
        const double target = is_first ? -5.0 : 5.0;
        EXPECT_NEAR(p[0], target, 0.05);
        EXPECT_NEAR(p[1], -target, 0.05);
        first += is_first ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(first) / 10000.0, 0.3, 0.02);
}
