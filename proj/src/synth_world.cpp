// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/synth_world.hpp"

#include "gcot/rng.hpp"
#include "gcot/target_extractor.hpp"
#include "gcot/text_util.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

namespace gcot {

namespace {

#include "font6x11.inc"

constexpr int kGlyphW = 6;
constexpr int kGlyphH = 11;
constexpr int kScale = 2;
constexpr int kCellPad = 4;
constexpr int kImageWidth = 800;
constexpr int kRowPitch = 72;
constexpr int kNameColumnX = 40;
constexpr int kPriceColumnX = 480;
constexpr int kCellHeight = kGlyphH * kScale + 2 * kCellPad;

constexpr std::string_view kRefusal = "I could not locate the region.";

constexpr std::array<std::string_view, 20> kAdjectives{
    "orange", "golden", "spicy",  "smoked",  "wild",   "crispy", "roasted", "salted", "frozen", "sweet",
    "purple", "tiny",   "royal",  "striped", "silver", "dark",   "pickled", "honey",  "rustic", "creamy",
};

constexpr std::array<std::string_view, 36> kNouns{
    "cone shell", "beef sauce", "marinara sauce", "olive oil", "lobster", "almond",  "pepper",  "lemon",   "mango",
    "cheese",     "walnut",     "salmon",         "tuna",      "basil",   "ginger",  "garlic",  "coconut", "oyster",
    "shrimp",     "noodle",     "cookie",         "pretzel",   "muffin",  "bagel",   "pickle",  "turnip",  "radish",
    "carrot",     "scallop",    "conch",          "sea star",  "cockle",  "whelk",   "papaya",  "kumquat", "sardine",
};

std::string format_cents(int cents) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%d.%02d", cents / 100, cents % 100);
    return buf;
}

std::string format_price(int cents) { return "$" + format_cents(cents); }

int parse_cents(std::string_view price) {
    const auto v = text::parse_normalized_decimal(price);
    if (!v) throw InvalidArgument("not a price: " + std::string(price));
    return static_cast<int>(std::lround(*v * 100.0));
}

bool names_confusable(const std::string& a, const std::string& b) {
    const auto ta = text::word_tokens(a);
    const auto tb = text::word_tokens(b);
    auto contains = [](const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
        return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
    };
    return contains(ta, tb) || contains(tb, ta) || text::edit_similarity(a, b) >= kNounSimilarityThreshold;
}

void draw_text(GrayImage& img, int x, int y, std::string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x20 || c > 0x7E) continue;
        const auto& glyph = kFont6x11[c - 0x20];
        for (int gy = 0; gy < kGlyphH; ++gy) {
            for (int gx = 0; gx < kGlyphW; ++gx) {
                if (!(glyph[gy] & (1 << (kGlyphW - 1 - gx)))) continue;
                for (int dy = 0; dy < kScale; ++dy) {
                    for (int dx = 0; dx < kScale; ++dx) {
                        const int px = x + static_cast<int>(i) * kGlyphW * kScale + gx * kScale + dx;
                        const int py = y + gy * kScale + dy;
                        if (px >= 0 && py >= 0 && px < img.width && py < img.height) img.at(px, py) = 0;
                    }
                }
            }
        }
    }
}

SynthCell make_cell(std::string id, std::string text, int x, int y, int row, int width, int height) {
    const int w = static_cast<int>(text.size()) * kGlyphW * kScale + 2 * kCellPad;
    const PixelRect rect{x, y, w, kCellHeight};
    const NBox box = validate_nbox(static_cast<double>(x) / width, static_cast<double>(y) / height,
                                   static_cast<double>(x + w) / width, static_cast<double>(y + kCellHeight) / height);
    return SynthCell{std::move(id), std::move(text), box, rect, row};
}

long long overlap_area(const PixelRect& a, const PixelRect& b) {
    const long long w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const long long h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return (w > 0 && h > 0) ? w * h : 0;
}

std::string between(std::string_view text, std::string_view head, std::string_view tail) {
    const auto a = text.find(head);
    if (a == std::string_view::npos) return {};
    const auto from = a + head.size();
    const auto b = text.find(tail, from);
    return std::string(text.substr(from, (b == std::string_view::npos ? text.size() : b) - from));
}

constexpr std::array<std::pair<CandidateKind, std::string_view>, 4> kCandidateKinds{{
    {CandidateKind::correct, "correct"},
    {CandidateKind::wrong_answer, "wrong_answer"},
    {CandidateKind::bad_box, "bad_box"},
    {CandidateKind::no_marker, "no_marker"},
}};

std::size_t sample_index(const SynthWorld& world, const QASample& sample) {
    for (std::size_t i = 0; i < world.qa.size(); ++i) {
        if (world.qa[i].sample_id == sample.sample_id) return i;
    }
    throw InvalidArgument("sample '" + sample.sample_id + "' is not part of the world");
}

}  // namespace

std::string_view to_string(CandidateKind kind) {
    for (const auto& [k, name] : kCandidateKinds) {
        if (k == kind) return name;
    }
    return "?";
}

CandidateKind candidate_kind_from_string(std::string_view s) {
    for (const auto& [k, name] : kCandidateKinds) {
        if (name == s) return k;
    }
    throw InvalidArgument("unknown candidate kind '" + std::string(s) + "'");
}

const SynthImage* SynthWorld::find_image(std::string_view image_id) const {
    for (const auto& img : images) {
        if (img.image.id == image_id) return &img;
    }
    return nullptr;
}

const QASample* SynthWorld::find_sample(std::string_view sample_id) const {
    for (const auto& s : qa) {
        if (s.sample_id == sample_id) return &s;
    }
    return nullptr;
}

void validate(const OraclePolicy& policy) {
    auto check = [](double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
    };
    if (policy.recall_schedule.empty()) throw InvalidArgument("recall_schedule must not be empty");
    for (double r : policy.recall_schedule) check(r, "recall_schedule entry");
    check(policy.box_jitter_rate, "box_jitter_rate");
    check(policy.wrong_content_rate, "wrong_content_rate");
    check(policy.cot_error_rate, "cot_error_rate");
    if (policy.candidate_script.empty()) throw InvalidArgument("candidate_script must not be empty");
}

GrayImage render_table(const SynthImage& image) {
    GrayImage img(image.image.width_px, image.image.height_px, 255);
    for (const auto& cell : image.cells) draw_text(img, cell.rect.x + kCellPad, cell.rect.y + kCellPad, cell.text);
    return img;
}

SynthWorld generate_world(std::uint64_t seed, int n_images, int items_per_image, const std::filesystem::path& out_dir) {
    if (n_images < 1) throw InvalidArgument("n_images must be >= 1");
    if (items_per_image < 2 || items_per_image > kMaxItemsPerImage) {
        throw InvalidArgument("items_per_image must lie in [2, " + std::to_string(kMaxItemsPerImage) + "]");
    }
    std::mt19937_64 engine(seed);
    auto pick = [&](std::size_t bound) { return static_cast<std::size_t>(rng::uniform_below(engine, bound)); };

    SynthWorld world;
    world.seed = seed;
    const auto image_dir = out_dir / "images";
    std::filesystem::create_directories(image_dir);
    const auto abs_image_dir = std::filesystem::absolute(image_dir);
    const int height = kRowPitch * (items_per_image + 1);

    for (int k = 0; k < n_images; ++k) {
        char id_buf[32];
        std::snprintf(id_buf, sizeof id_buf, "img%03d", k);
        SynthImage img;
        img.image.id = id_buf;
        img.image.uri = abs_image_dir / (img.image.id + ".png");
        img.image.width_px = kImageWidth;
        img.image.height_px = height;

        std::vector<std::string> names;
        std::set<int> prices;
        while (static_cast<int>(names.size()) < items_per_image) {
            std::string name(kNouns[pick(kNouns.size())]);
            if (pick(2) == 0) name = std::string(kAdjectives[pick(kAdjectives.size())]) + " " + name;
            const bool clash = std::any_of(names.begin(), names.end(),
                                           [&](const std::string& other) { return names_confusable(name, other); });
            if (!clash) names.push_back(std::move(name));
        }
        std::vector<int> row_prices;
        while (static_cast<int>(row_prices.size()) < items_per_image) {
            const int cents = 10 + static_cast<int>(pick(990));
            if (prices.insert(cents).second) row_prices.push_back(cents);
        }
        for (int r = 0; r < items_per_image; ++r) {
            const int y = kRowPitch / 2 + kRowPitch * r + (kRowPitch - kCellHeight) / 2;
            const std::string row_id = img.image.id + "/r" + std::to_string(r);
            img.cells.push_back(make_cell(row_id + "/name", names[r], kNameColumnX, y, r, kImageWidth, height));
            img.cells.push_back(
                make_cell(row_id + "/price", format_price(row_prices[r]), kPriceColumnX, y, r, kImageWidth, height));
        }

        const int a = static_cast<int>(pick(items_per_image));
        int b = static_cast<int>(pick(items_per_image - 1));
        if (b >= a) ++b;
        const auto [first, second] = std::minmax(a, b);

        QASample sample;
        char sid_buf[32];
        std::snprintf(sid_buf, sizeof sid_buf, "s%03d", k);
        sample.sample_id = sid_buf;
        sample.image = img.image;
        sample.question = "How much do " + names[first] + " and " + names[second] + " cost together?";
        sample.gold_answer = format_cents(row_prices[first] + row_prices[second]);
        sample.dataset = DatasetTag::synth;

        const auto png = encode_png(render_table(img), {{std::string(kProvenanceKey), img.image.id}});
        std::ofstream out(img.image.uri, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + img.image.uri.string());
        out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
        if (!out) throw IoError("write failed for " + img.image.uri.string());

        world.images.push_back(std::move(img));
        world.qa.push_back(std::move(sample));
        world.qa_items.emplace_back(first, second);
    }

    const auto manifest = world_to_manifest(world, out_dir);
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf) throw IoError("cannot write " + (out_dir / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
    return world;
}

nlohmann::json world_to_manifest(const SynthWorld& world, const std::filesystem::path& base_dir) {
    const auto base = std::filesystem::absolute(base_dir);
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : world.images) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& c : img.cells) {
            cells.push_back({
                {"id", c.id},
                {"text", c.text},
                {"row", c.row},
                {"box", {c.box.x1(), c.box.y1(), c.box.x2(), c.box.y2()}},
                {"rect", {c.rect.x, c.rect.y, c.rect.w, c.rect.h}},
            });
        }
        images.push_back({
            {"id", img.image.id},
            {"uri", std::filesystem::relative(img.image.uri, base).generic_string()},
            {"width_px", img.image.width_px},
            {"height_px", img.image.height_px},
            {"cells", std::move(cells)},
        });
    }
    nlohmann::json qa = nlohmann::json::array();
    for (std::size_t i = 0; i < world.qa.size(); ++i) {
        const auto& s = world.qa[i];
        qa.push_back({
            {"sample_id", s.sample_id},
            {"image_id", s.image.id},
            {"question", s.question},
            {"answer", s.gold_answer},
            {"items", {world.qa_items[i].first, world.qa_items[i].second}},
        });
    }
    return {{"v", "v1"}, {"kind", "synth_world"}, {"seed", world.seed}, {"images", images}, {"qa", qa}};
}

SynthWorld world_from_manifest(const nlohmann::json& manifest, const std::filesystem::path& base_dir) {
    try {
        SynthWorld world;
        world.seed = manifest.at("seed").get<std::uint64_t>();
        for (const auto& ji : manifest.at("images")) {
            SynthImage img;
            img.image.id = ji.at("id").get<std::string>();
            img.image.uri = std::filesystem::absolute(base_dir / ji.at("uri").get<std::string>());
            img.image.width_px = ji.at("width_px").get<int>();
            img.image.height_px = ji.at("height_px").get<int>();
            for (const auto& jc : ji.at("cells")) {
                const auto b = jc.at("box").get<std::array<double, 4>>();
                const auto r = jc.at("rect").get<std::array<int, 4>>();
                img.cells.push_back(SynthCell{jc.at("id").get<std::string>(), jc.at("text").get<std::string>(),
                                              validate_nbox(b[0], b[1], b[2], b[3]), PixelRect{r[0], r[1], r[2], r[3]},
                                              jc.at("row").get<int>()});
            }
            world.images.push_back(std::move(img));
        }
        for (const auto& jq : manifest.at("qa")) {
            const auto image_id = jq.at("image_id").get<std::string>();
            const auto* img = world.find_image(image_id);
            if (!img) throw SchemaError(0, "qa references unknown image '" + image_id + "'");
            QASample s;
            s.sample_id = jq.at("sample_id").get<std::string>();
            s.image = img->image;
            s.question = jq.at("question").get<std::string>();
            s.gold_answer = jq.at("answer").get<std::string>();
            s.dataset = DatasetTag::synth;
            const auto items = jq.at("items").get<std::array<int, 2>>();
            world.qa.push_back(std::move(s));
            world.qa_items.emplace_back(items[0], items[1]);
        }
        return world;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(0, std::string("synth manifest: ") + e.what());
    }
}

SynthWorld load_world(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError(1, "synth manifest is not valid JSON");
    return world_from_manifest(j, manifest_path.parent_path());
}

// --- Oracle -----------------------------------------------------------------

double policy_draw(std::uint64_t policy_seed, std::string_view key) {
    return rng::to_unit(rng::splitmix64(rng::fnv1a64(key) ^ rng::splitmix64(policy_seed)));
}

int model_round(std::string_view model) {
    const auto at = model.rfind('@');
    if (at == std::string_view::npos || at + 1 == model.size()) return 0;
    int round = 0;
    for (char c : model.substr(at + 1)) {
        if (!text::is_ascii_digit(c)) return 0;
        round = round * 10 + (c - '0');
    }
    return round;
}

std::string next_round_model(std::string_view model) {
    const int round = model_round(model);
    const auto at = model.rfind('@');
    const bool suffixed = at != std::string_view::npos && model.substr(at + 1) == std::to_string(round);
    return std::string(suffixed ? model.substr(0, at) : model) + "@" + std::to_string(round + 1);
}

std::string recall_key(std::string_view image_id, std::string_view target, int round) {
    return "ground|" + std::string(image_id) + "|" + text::casefold(target) + "|" + std::to_string(round);
}

std::string jitter_key(std::string_view image_id, std::string_view target, int round) {
    return "jitter|" + std::string(image_id) + "|" + text::casefold(target) + "|" + std::to_string(round);
}

std::string read_key(std::string_view image_id, const PixelRect& rect, int round) {
    return "read|" + std::string(image_id) + "|" + std::to_string(rect.x) + "," + std::to_string(rect.y) + "," +
           std::to_string(rect.w) + "," + std::to_string(rect.h) + "|" + std::to_string(round);
}

std::string cot_error_key(std::string_view sample_id) { return "cot|" + std::string(sample_id); }

std::string corrupt_text(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>('a' + (c - 'a' + 13) % 26);
        else if (c >= 'A' && c <= 'Z') c = static_cast<char>('A' + (c - 'A' + 13) % 26);
        else if (c >= '0' && c <= '9') c = static_cast<char>('0' + (c - '0' + 5) % 10);
    }
    return out;
}

const SynthCell* cell_under_crop(const SynthImage& image, const PixelRect& crop) {
    const SynthCell* best = nullptr;
    double best_cover = 0.0;
    long long best_area = 0;
    for (const auto& cell : image.cells) {
        const long long area = overlap_area(cell.rect, crop);
        if (area == 0) continue;
        const double cover = static_cast<double>(area) / (static_cast<double>(cell.rect.w) * cell.rect.h);
        const bool better = !best || cover > best_cover || (cover == best_cover && area > best_area) ||
                            (cover == best_cover && area == best_area && cell.id < best->id);
        if (better) {
            best = &cell;
            best_cover = cover;
            best_area = area;
        }
    }
    return best;
}

const SynthCell* cell_for_target(const SynthImage& image, std::string_view target) {
    const bool numeric = text::is_number_token(target);
    for (const auto& cell : image.cells) {
        if (numeric) {
            const auto a = text::parse_normalized_decimal(target);
            const auto b = text::parse_normalized_decimal(cell.text);
            if (a && b && text::nearly_equal(*a, *b, kNumberMatchTolerance)) return &cell;
        } else if (text::word_tokens(target) == text::word_tokens(cell.text)) {
            return &cell;
        }
    }
    return nullptr;
}

NBox jittered_box(const SynthImage& image, const SynthCell& cell) {
    const int rows = static_cast<int>(image.cells.size() / 2);
    const int neighbour_row = cell.row + 1 < rows ? cell.row + 1 : cell.row - 1;
    const bool is_price = cell.id.ends_with("/price");
    const auto& neighbour = image.cells[static_cast<std::size_t>(neighbour_row) * 2 + (is_price ? 1 : 0)];
    const double dy = neighbour.box.y1() - cell.box.y1();
    return validate_nbox(cell.box.x1(), cell.box.y1() + dy, cell.box.x2(), cell.box.y2() + dy);
}

std::string synth_cot_text(const SynthWorld& world, const QASample& sample, bool misstate_first_price) {
    const auto idx = sample_index(world, sample);
    const auto* img = world.find_image(sample.image.id);
    if (!img) throw InvalidArgument("unknown image '" + sample.image.id + "'");
    const auto [a, b] = world.qa_items[idx];
    const auto& name_a = img->cells[static_cast<std::size_t>(a) * 2].text;
    const auto& name_b = img->cells[static_cast<std::size_t>(b) * 2].text;
    std::string price_a = img->cells[static_cast<std::size_t>(a) * 2 + 1].text;
    const auto& price_b = img->cells[static_cast<std::size_t>(b) * 2 + 1].text;
    if (misstate_first_price) {
        // A value that appears nowhere in the table, so it can never be grounded.
        int cents = parse_cents(price_a);
        auto taken = [&](int c) {
            return std::any_of(img->cells.begin(), img->cells.end(),
                               [&](const SynthCell& cell) { return cell.text == format_price(c); });
        };
        do cents += 11;
        while (taken(cents));
        price_a = format_price(cents);
    }
    return "To answer, look up both items in the table. The price of " + name_a + " is " + price_a +
           ". The price of " + name_b + " is " + price_b + ". Adding the two prices gives the total cost. " +
           std::string(kAnswerMarker) + " " + sample.gold_answer;
}

ScriptedOracle::ScriptedOracle(std::shared_ptr<const SynthWorld> world, OraclePolicy policy)
    : world_(std::move(world)), policy_(std::move(policy)) {
    if (!world_) throw InvalidArgument("oracle needs a world");
    validate(policy_);
}

std::string ScriptedOracle::answer(const ChatRequest& request) const {
    const auto text = request.all_text();
    if (text.find(kDistillPromptHead) != std::string::npos) return answer_distill(request);
    if (text.find(kGroundingInstruction) != std::string::npos) return answer_ground(request);
    if (text.find(kReadingPrompt) != std::string::npos) return answer_read(request);
    if (text.find(kGenerationInstruction) != std::string::npos) return answer_generate(request);
    throw UnclassifiablePrompt("oracle cannot classify prompt: " + text.substr(0, 80));
}

const SynthImage& ScriptedOracle::image_of(const ChatRequest& request) const {
    const auto* attachment = request.image();
    if (!attachment) throw InvalidArgument("oracle request carries no image");
    const auto source = png_text_chunk(attachment->bytes, kProvenanceKey);
    if (!source) throw InvalidArgument("oracle image has no provenance chunk");
    const auto id = source->substr(0, source->find('#'));
    const auto* img = world_->find_image(id);
    if (!img) throw InvalidArgument("oracle does not know image '" + id + "'");
    return *img;
}

std::string ScriptedOracle::answer_distill(const ChatRequest& request) const {
    const auto text = request.all_text();
    const auto question = between(text, kDistillPromptHead, " Your task is");
    const SynthImage* img = request.image() ? &image_of(request) : nullptr;
    for (const auto& sample : world_->qa) {
        if (sample.question != question || (img && sample.image.id != img->image.id)) continue;
        const bool misstate = policy_draw(policy_.seed, cot_error_key(sample.sample_id)) < policy_.cot_error_rate;
        return synth_cot_text(*world_, sample, misstate);
    }
    throw InvalidArgument("oracle has no sample for question: " + question);
}

std::string ScriptedOracle::answer_ground(const ChatRequest& request) const {
    const auto& img = image_of(request);
    const auto text = request.all_text();
    const auto head = text.find("Where is the ");
    const auto instr = text.find(kGroundingInstruction);
    const auto qmark = text.rfind('?', instr);
    if (head == std::string::npos || qmark == std::string::npos || qmark < head + 13) return std::string(kRefusal);
    const auto target = text.substr(head + 13, qmark - head - 13);

    const int round = model_round(request.model);
    const auto& schedule = policy_.recall_schedule;
    const double recall = schedule[std::min<std::size_t>(static_cast<std::size_t>(round), schedule.size() - 1)];

    const auto* cell = cell_for_target(img, target);
    if (!cell) return std::string(kRefusal);
    if (policy_draw(policy_.seed, recall_key(img.image.id, target, round)) >= recall) return std::string(kRefusal);
    if (policy_draw(policy_.seed, jitter_key(img.image.id, target, round)) < policy_.box_jitter_rate) {
        return format_nbox(quantize(jittered_box(img, *cell)));
    }
    return format_nbox(quantize(cell->box));
}

std::string ScriptedOracle::answer_read(const ChatRequest& request) const {
    const auto& img = image_of(request);
    const auto source = *png_text_chunk(request.image()->bytes, kProvenanceKey);
    const auto hash = source.find('#');
    if (hash == std::string::npos) throw InvalidArgument("read request image is not a crop");
    PixelRect rect;
    if (std::sscanf(source.c_str() + hash + 1, "%d,%d,%d,%d", &rect.x, &rect.y, &rect.w, &rect.h) != 4) {
        throw InvalidArgument("malformed crop provenance '" + source + "'");
    }
    const auto* cell = cell_under_crop(img, rect);
    if (!cell) return {};
    const int round = model_round(request.model);
    if (policy_draw(policy_.seed, read_key(img.image.id, rect, round)) < policy_.wrong_content_rate) {
        return corrupt_text(cell->text);
    }
    return cell->text;
}

std::string ScriptedOracle::answer_generate(const ChatRequest& request) const {
    const auto& img = image_of(request);
    const auto text = request.all_text();
    const auto question = std::string(text::trim(text.substr(0, text.find(kGenerationInstruction))));
    const QASample* sample = nullptr;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < world_->qa.size(); ++i) {
        if (world_->qa[i].image.id == img.image.id && world_->qa[i].question == question) {
            sample = &world_->qa[i];
            idx = i;
        }
    }
    if (!sample) throw InvalidArgument("oracle has no sample for question: " + question);

    const auto& script = policy_.candidate_script;
    const auto kind = script[static_cast<std::size_t>(request.seed.value_or(0) % script.size())];
    const auto [a, b] = world_->qa_items[idx];
    const auto& name_a = img.cells[static_cast<std::size_t>(a) * 2];
    const auto& price_a = img.cells[static_cast<std::size_t>(a) * 2 + 1];
    const auto& name_b = img.cells[static_cast<std::size_t>(b) * 2];
    const auto& price_b = img.cells[static_cast<std::size_t>(b) * 2 + 1];
    auto boxed = [](const SynthCell& c) { return c.text + " " + format_nbox(quantize(c.box)); };
    const std::string last_price = kind == CandidateKind::bad_box
                                       ? price_b.text + " " + format_nbox(quantize(jittered_box(img, price_b)))
                                       : boxed(price_b);
    std::string out = "The price of " + boxed(name_a) + " is " + boxed(price_a) + ". The price of " + boxed(name_b) +
                      " is " + last_price + ". Adding the two prices gives the total cost. ";
    const int gold_cents = parse_cents(sample->gold_answer);
    switch (kind) {
        case CandidateKind::wrong_answer:
            out += std::string(kAnswerMarker) + " " + format_cents(gold_cents + 50);
            break;
        case CandidateKind::no_marker:
            out += "So the total cost is " + sample->gold_answer + ".";
            break;
        case CandidateKind::correct:
        case CandidateKind::bad_box:
            out += std::string(kAnswerMarker) + " " + sample->gold_answer;
            break;
    }
    return out;
}

BackendProfile oracle_configure(std::shared_ptr<const SynthWorld> world, const OraclePolicy& policy,
                                int max_in_flight) {
    BackendProfile profile;
    profile.name = "oracle";
    profile.endpoint_url = "oracle://local";
    profile.auth_env_var.clear();
    profile.max_retries = 0;
    profile.max_in_flight = max_in_flight;
    profile.oracle = std::make_shared<ScriptedOracle>(std::move(world), policy);
    return profile;
}

}  // namespace gcot
