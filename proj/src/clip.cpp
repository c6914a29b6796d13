#include "mhpp/clip.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "mhpp/error.hpp"

namespace mhpp {
namespace {

double lum(const std::uint8_t* px) { return (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0; }

/// Unit vector and norm; throws on a zero vector.
double normalize_into(std::span<const double> z, std::span<double> out) {
    const double n = norm2(z);
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("clip: zero-norm embedding");
    for (std::size_t k = 0; k < z.size(); ++k) out[k] = z[k] / n;
    return n;
}

/// d/dz of a quantity with gradient g wrt n = z / |z|.
void normalize_backward(std::span<const double> n, double norm, std::span<const double> g, Vector& dz) {
    const double ng = dot(n, g);
    dz.resize(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) dz[k] = (g[k] - n[k] * ng) / norm;
}

Vector mean_rows(const DenseMatrix& table, std::span<const std::size_t> ids) {
    if (ids.empty()) throw DomainError("clip text encoder: no tokens");
    Vector p(table.cols(), 0.0);
    for (const auto id : ids) {
        if (id >= table.rows()) throw ShapeError("clip text encoder: token id out of range");
        const auto r = table.row(id);
        for (std::size_t k = 0; k < p.size(); ++k) p[k] += r[k];
    }
    for (auto& x : p) x /= static_cast<double>(ids.size());
    return p;
}

struct ImageForward {
    Vector h;   // tanh hidden
    Vector f;   // I_f
    Vector z;   // projected
    Vector n;   // normalized
    double norm = 0.0;
};

struct TextForward {
    Vector p;   // pooled tokens
    Vector g;   // T_f
    Vector y;
    Vector m;
    double norm = 0.0;
};

ImageForward image_forward(const ClipModel& model, std::span<const double> x) {
    const auto& ip = model.image;
    ImageForward f;
    f.h = matvec(ip.w1, x);
    for (std::size_t k = 0; k < f.h.size(); ++k) f.h[k] = std::tanh(f.h[k] + ip.b1(k, 0));
    f.f = matvec(ip.w2, f.h);
    for (std::size_t k = 0; k < f.f.size(); ++k) f.f[k] += ip.b2(k, 0);
    f.z = matvec(model.projectors.image, f.f);
    f.n.resize(f.z.size());
    f.norm = normalize_into(f.z, f.n);
    return f;
}

TextForward text_forward(const ClipModel& model, std::span<const std::size_t> ids) {
    const auto& tp = model.text;
    TextForward f;
    f.p = mean_rows(tp.table, ids);
    f.g = matvec(tp.weight, f.p);
    for (std::size_t k = 0; k < f.g.size(); ++k) f.g[k] = std::tanh(f.g[k] + tp.bias(k, 0));
    f.y = matvec(model.projectors.text, f.g);
    f.m.resize(f.y.size());
    f.norm = normalize_into(f.y, f.m);
    return f;
}

/// Listings without photos get an all-black collage.
RasterImage listing_collage(const ClipModel& model, const Listing& listing) {
    if (listing.images.empty()) return RasterImage(kCollageTiles * model.tile, model.tile);
    return make_collage(listing.images, model.tile);
}

double log_sum_exp(std::span<const double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (const double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

std::size_t patch_feature_count(std::size_t grid) { return kPatchStatistics * grid * grid * kCollageTiles; }

Vector patch_features(const RasterImage& collage, std::size_t grid) {
    if (grid == 0) throw DomainError("patch_features: grid must be positive");
    const std::size_t cols = grid * kCollageTiles;
    if (collage.width == 0 || collage.height == 0 || collage.height % grid != 0 || collage.width % cols != 0) {
        throw ShapeError("patch_features: " + std::to_string(collage.width) + "x" +
                         std::to_string(collage.height) + " collage does not divide into " +
                         std::to_string(grid) + "x" + std::to_string(cols) + " patches");
    }
    const std::size_t ph = collage.height / grid;
    const std::size_t pw = collage.width / cols;
    Vector out;
    out.reserve(patch_feature_count(grid));
    for (std::size_t py = 0; py < grid; ++py) {
        for (std::size_t px = 0; px < cols; ++px) {
            const std::size_t x0 = px * pw, y0 = py * ph;
            double rgb[3] = {0.0, 0.0, 0.0};
            double ls = 0.0, ls2 = 0.0, gx = 0.0, gy = 0.0;
            for (std::size_t y = y0; y < y0 + ph; ++y) {
                for (std::size_t x = x0; x < x0 + pw; ++x) {
                    const auto* p = collage.at(x, y);
                    for (int c = 0; c < 3; ++c) rgb[c] += p[c] / 255.0;
                    const double l = lum(p);
                    ls += l;
                    ls2 += l * l;
                    if (x + 1 < x0 + pw) gx += std::abs(lum(collage.at(x + 1, y)) - l);
                    if (y + 1 < y0 + ph) gy += std::abs(lum(collage.at(x, y + 1)) - l);
                }
            }
            const double count = static_cast<double>(ph * pw);
            const double mean_l = ls / count;
            for (const double c : rgb) out.push_back(c / count);
            out.push_back(std::sqrt(std::max(0.0, ls2 / count - mean_l * mean_l)));
            out.push_back(pw > 1 ? gx / static_cast<double>((pw - 1) * ph) : 0.0);
            out.push_back(ph > 1 ? gy / static_cast<double>((ph - 1) * pw) : 0.0);
        }
    }
    return out;
}

std::vector<DenseMatrix*> ClipModel::parameters() {
    return {&image.w1, &image.b1, &image.w2, &image.b2, &text.table, &text.weight,
            &text.bias, &projectors.image, &projectors.text};
}

std::vector<const DenseMatrix*> ClipModel::parameters() const {
    auto m = const_cast<ClipModel*>(this)->parameters();
    return {m.begin(), m.end()};
}

ClipModel ClipModel::zeros_like() const {
    ClipModel z = *this;
    for (auto* p : z.parameters()) p->fill(0.0);
    return z;
}

Vector encode_image(const ImageEncoderParams& params, const RasterImage& collage) {
    const auto x = patch_features(collage, params.grid);
    if (x.size() != params.w1.cols()) throw ShapeError("encode_image: feature count does not match encoder");
    Vector h = matvec(params.w1, x);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = std::tanh(h[k] + params.b1(k, 0));
    Vector f = matvec(params.w2, h);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += params.b2(k, 0);
    return f;
}

Vector encode_text(const ClipTextEncoderParams& params, std::span<const std::size_t> token_ids) {
    const auto p = mean_rows(params.table, token_ids);
    Vector g = matvec(params.weight, p);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::tanh(g[k] + params.bias(k, 0));
    return g;
}

DenseMatrix similarity_matrix(const DenseMatrix& image_embeddings, const DenseMatrix& text_embeddings) {
    if (image_embeddings.rows() != text_embeddings.rows() || image_embeddings.cols() != text_embeddings.cols()) {
        throw ShapeError("similarity_matrix: image and text embeddings differ in shape");
    }
    const std::size_t b = image_embeddings.rows(), e = image_embeddings.cols();
    DenseMatrix ni(b, e), nt(b, e);
    for (std::size_t i = 0; i < b; ++i) {
        normalize_into(image_embeddings.row(i), ni.row(i));
        normalize_into(text_embeddings.row(i), nt.row(i));
    }
    DenseMatrix sim(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t t = 0; t < b; ++t) sim(i, t) = std::clamp(dot(ni.row(i), nt.row(t)), -1.0, 1.0);
    }
    return sim;
}

ClipLoss symmetric_clip_loss(const DenseMatrix& sim, double temperature) {
    if (sim.rows() != sim.cols() || sim.rows() == 0) throw ShapeError("symmetric_clip_loss: sim must be square");
    if (!(temperature > 0.0)) throw DomainError("symmetric_clip_loss: temperature must be positive");
    const std::size_t b = sim.rows();
    const double inv_b = 1.0 / static_cast<double>(b);
    ClipLoss out{0.0, DenseMatrix(b, b)};
    Vector row(b), col(b);
    double row_loss = 0.0, col_loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            row[j] = sim(i, j) / temperature;
            col[j] = sim(j, i) / temperature;
        }
        const double lr = log_sum_exp(row), lc = log_sum_exp(col);
        row_loss += lr - row[i];
        col_loss += lc - col[i];
        for (std::size_t j = 0; j < b; ++j) {
            out.d_sim(i, j) += 0.5 * inv_b * (std::exp(row[j] - lr) - (i == j ? 1.0 : 0.0)) / temperature;
            out.d_sim(j, i) += 0.5 * inv_b * (std::exp(col[j] - lc) - (i == j ? 1.0 : 0.0)) / temperature;
        }
    }
    out.loss = 0.5 * inv_b * (row_loss + col_loss);
    return out;
}

ClipExample make_clip_example(const ClipModel& model, const Listing& listing) {
    const auto collage = listing_collage(model, listing);
    return {patch_features(collage, model.image.grid), model.text.vocab.encode(tokenize(listing.description))};
}

ClipBatchLoss clip_batch_loss(const ClipModel& model, std::span<const ClipExample> batch) {
    const std::size_t b = batch.size();
    if (b < 2) throw DomainError("clip_batch_loss: batch needs at least two pairs");
    const std::size_t e = model.embed_dim();
    std::vector<ImageForward> img;
    std::vector<TextForward> txt;
    img.reserve(b);
    txt.reserve(b);
    for (const auto& ex : batch) {
        if (ex.features.size() != model.image.w1.cols()) throw ShapeError("clip_batch_loss: feature count mismatch");
        img.push_back(image_forward(model, ex.features));
        txt.push_back(text_forward(model, ex.tokens));
    }
    DenseMatrix sim(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t t = 0; t < b; ++t) sim(i, t) = dot(img[i].n, txt[t].m);
    }
    const auto loss = symmetric_clip_loss(sim, model.projectors.temperature);

    ClipBatchLoss out{loss.loss, model.zeros_like()};
    auto& g = out.gradient;
    const auto& m = model;
    Vector dn(e), dz;
    for (std::size_t i = 0; i < b; ++i) {
        // Image side.
        std::fill(dn.begin(), dn.end(), 0.0);
        for (std::size_t t = 0; t < b; ++t) {
            for (std::size_t k = 0; k < e; ++k) dn[k] += loss.d_sim(i, t) * txt[t].m[k];
        }
        normalize_backward(img[i].n, img[i].norm, dn, dz);
        add_outer(g.projectors.image, dz, img[i].f);
        const Vector df = matvec_transposed(m.projectors.image, dz);
        add_outer(g.image.w2, df, img[i].h);
        for (std::size_t k = 0; k < df.size(); ++k) g.image.b2(k, 0) += df[k];
        Vector da = matvec_transposed(m.image.w2, df);
        for (std::size_t k = 0; k < da.size(); ++k) {
            da[k] *= 1.0 - img[i].h[k] * img[i].h[k];
            g.image.b1(k, 0) += da[k];
        }
        add_outer(g.image.w1, da, batch[i].features);

        // Text side.
        std::fill(dn.begin(), dn.end(), 0.0);
        for (std::size_t r = 0; r < b; ++r) {
            for (std::size_t k = 0; k < e; ++k) dn[k] += loss.d_sim(r, i) * img[r].n[k];
        }
        normalize_backward(txt[i].m, txt[i].norm, dn, dz);
        add_outer(g.projectors.text, dz, txt[i].g);
        Vector dq = matvec_transposed(m.projectors.text, dz);
        for (std::size_t k = 0; k < dq.size(); ++k) {
            dq[k] *= 1.0 - txt[i].g[k] * txt[i].g[k];
            g.text.bias(k, 0) += dq[k];
        }
        add_outer(g.text.weight, dq, txt[i].p);
        const Vector dp = matvec_transposed(m.text.weight, dq);
        const double share = 1.0 / static_cast<double>(batch[i].tokens.size());
        for (const auto id : batch[i].tokens) {
            auto row = g.text.table.row(id);
            for (std::size_t k = 0; k < dp.size(); ++k) row[k] += share * dp[k];
        }
    }
    return out;
}

ClipModel init_clip(Vocabulary vocab, const ClipConfig& config) {
    if (config.batch_size < 2) throw DomainError("clip: batch size must be at least 2");
    if (config.embed_dim == 0) throw DomainError("clip: embedding dimension must be positive");
    if (!(config.temperature > 0.0)) throw DomainError("clip: temperature must be positive");
    Rng rng(derive_seed(config.seed, "clip.init"));
    const std::size_t F = patch_feature_count(config.grid);
    const auto inv_sqrt = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
    ClipModel m;
    m.tile = config.tile;
    m.image.grid = config.grid;
    m.image.w1 = DenseMatrix::random_normal(config.image_hidden, F, 2.0 * inv_sqrt(F), rng);
    m.image.b1 = DenseMatrix(config.image_hidden, 1);
    m.image.w2 = DenseMatrix::random_normal(config.image_dim, config.image_hidden, inv_sqrt(config.image_hidden), rng);
    m.image.b2 = DenseMatrix(config.image_dim, 1);
    const std::size_t V = vocab.size();
    m.text.vocab = std::move(vocab);
    m.text.table = DenseMatrix::random_normal(V, config.token_dim, 1.0, rng);
    m.text.weight = DenseMatrix::random_normal(config.text_dim, config.token_dim, inv_sqrt(config.token_dim), rng);
    m.text.bias = DenseMatrix(config.text_dim, 1);
    m.projectors.image = DenseMatrix::random_normal(config.embed_dim, config.image_dim, inv_sqrt(config.image_dim), rng);
    m.projectors.text = DenseMatrix::random_normal(config.embed_dim, config.text_dim, inv_sqrt(config.text_dim), rng);
    m.projectors.temperature = config.temperature;
    return m;
}

ClipModel train_clip(std::span<const Listing> train, const ClipConfig& config, ClipTrainingLog* log) {
    if (train.size() < config.batch_size) {
        throw DomainError("train_clip: " + std::to_string(train.size()) + " listings is fewer than batch size " +
                          std::to_string(config.batch_size));
    }
    if (config.epochs == 0) throw DomainError("train_clip: epochs must be positive");
    std::vector<std::string> descriptions;
    descriptions.reserve(train.size());
    for (const auto& l : train) descriptions.push_back(l.description);
    ClipModel model = init_clip(build_vocab(descriptions, config.min_count), config);

    std::vector<ClipExample> examples;
    examples.reserve(train.size());
    for (const auto& l : train) examples.push_back(make_clip_example(model, l));

    auto params = model.parameters();
    AdamOptimizer adam(params, AdamConfig{.learning_rate = config.learning_rate});
    Rng rng(derive_seed(config.seed, "clip.train"));
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batches = examples.size() / config.batch_size;
    std::vector<ClipExample> batch(config.batch_size);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double total = 0.0;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            for (std::size_t k = 0; k < config.batch_size; ++k) batch[k] = examples[order[bi * config.batch_size + k]];
            auto step = clip_batch_loss(model, batch);
            const auto grads = std::as_const(step.gradient).parameters();
            adam.step(params, grads);
            total += step.loss;
        }
        if (log) log->epoch_loss.push_back(total / static_cast<double>(batches));
    }
    return model;
}

Vector embed_image(const ClipModel& model, const RasterImage& collage) {
    const auto f = encode_image(model.image, collage);
    Vector z = matvec(model.projectors.image, f);
    normalize_into(Vector(z), z);
    return z;
}

Vector embed_listing_image(const ClipModel& model, const Listing& listing) {
    return embed_image(model, listing_collage(model, listing));
}

Vector embed_clip_text(const ClipModel& model, std::string_view description) {
    const auto ids = model.text.vocab.encode(tokenize(description));
    Vector y = matvec(model.projectors.text, encode_text(model.text, ids));
    normalize_into(Vector(y), y);
    return y;
}

double retrieval_accuracy(const ClipModel& model, std::span<const Listing> batch) {
    if (batch.empty()) throw DomainError("retrieval_accuracy: empty batch");
    const std::size_t b = batch.size(), e = model.embed_dim();
    DenseMatrix img(b, e), txt(b, e);
    for (std::size_t i = 0; i < b; ++i) {
        const auto vi = embed_listing_image(model, batch[i]);
        const auto vt = embed_clip_text(model, batch[i].description);
        std::copy(vi.begin(), vi.end(), img.row(i).begin());
        std::copy(vt.begin(), vt.end(), txt.row(i).begin());
    }
    const auto sim = similarity_matrix(img, txt);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < b; ++i) {
        const auto r = sim.row(i);
        const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
        if (best == i) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(b);
}

Json clip_to_json(const ClipModel& model) {
    Json j = model_envelope("clip");
    j["tile"] = model.tile;
    j["grid"] = model.image.grid;
    j["temperature"] = model.projectors.temperature;
    Json tokens = Json::array();
    for (std::size_t i = 2; i < model.text.vocab.size(); ++i) tokens.push_back(model.text.vocab.token(i));
    j["tokens"] = std::move(tokens);
    j["image"] = {{"w1", matrix_to_json(model.image.w1)},
                  {"b1", matrix_to_json(model.image.b1)},
                  {"w2", matrix_to_json(model.image.w2)},
                  {"b2", matrix_to_json(model.image.b2)}};
    j["text"] = {{"table", matrix_to_json(model.text.table)},
                 {"weight", matrix_to_json(model.text.weight)},
                 {"bias", matrix_to_json(model.text.bias)}};
    j["projectors"] = {{"image", matrix_to_json(model.projectors.image)},
                       {"text", matrix_to_json(model.projectors.text)}};
    return j;
}

ClipModel clip_from_json(const Json& j) {
    check_envelope(j, "clip");
    ClipModel m;
    try {
        m.tile = j.at("tile").get<std::size_t>();
        m.image.grid = j.at("grid").get<std::size_t>();
        m.projectors.temperature = j.at("temperature").get<double>();
        m.text.vocab = Vocabulary(j.at("tokens").get<std::vector<std::string>>());
        const auto& im = j.at("image");
        m.image.w1 = matrix_from_json(im.at("w1"));
        m.image.b1 = matrix_from_json(im.at("b1"));
        m.image.w2 = matrix_from_json(im.at("w2"));
        m.image.b2 = matrix_from_json(im.at("b2"));
        const auto& tx = j.at("text");
        m.text.table = matrix_from_json(tx.at("table"));
        m.text.weight = matrix_from_json(tx.at("weight"));
        m.text.bias = matrix_from_json(tx.at("bias"));
        const auto& pr = j.at("projectors");
        m.projectors.image = matrix_from_json(pr.at("image"));
        m.projectors.text = matrix_from_json(pr.at("text"));
    } catch (const Json::exception& e) {
        throw FormatError(std::string("clip dump: ") + e.what());
    }
    if (m.text.table.rows() != m.text.vocab.size()) throw FormatError("clip dump: table rows do not match vocabulary");
    if (m.image.w1.cols() != patch_feature_count(m.image.grid)) throw FormatError("clip dump: feature count mismatch");
    return m;
}

}  // namespace mhpp
