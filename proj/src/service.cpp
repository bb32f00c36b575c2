#include "dfit/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <semaphore>

#include <httplib.h>
#include <json.hpp>
#include <sodium.h>

#include "dfit/error.hpp"
#include "dfit/fit.hpp"
#include "dfit/io.hpp"

namespace dfit {

using nlohmann::json;

std::string base64_decode(std::string_view text) {
    std::string out(text.size() / 4 * 3 + 3, '\0');
    std::size_t len = 0;
    const char* end = nullptr;
    if (sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(), text.data(), text.size(), " \t\r\n",
                          &len, &end, sodium_base64_VARIANT_ORIGINAL) != 0 ||
        end != text.data() + text.size()) {
        const std::size_t at = end ? static_cast<std::size_t>(end - text.data()) : 0;
        throw ParseError("invalid base64", at);
    }
    out.resize(len);
    return out;
}

std::string base64_encode(std::string_view bytes) {
    std::string out(sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
                      sodium_base64_VARIANT_ORIGINAL);
    out.resize(out.size() - 1);
    return out;
}

struct Service::Impl {
    explicit Impl(unsigned fits) : fit_slots(static_cast<std::ptrdiff_t>(std::max(1u, fits))) {}
    std::counting_semaphore<1024> fit_slots;
    httplib::Server server;
    bool configured = false;
};

namespace {

HttpResponse reply(int status, const json& body) { return {status, body.dump() + "\n"}; }

HttpResponse error_reply(int status, const std::string& message, std::optional<std::size_t> offset = std::nullopt) {
    json body{{"error", message}};
    if (offset) body["offset"] = *offset;
    return reply(status, body);
}

std::string preview_svg(const GlyphTemplate& templ, const std::vector<double>& params) {
    SvgFrame frame;
    frame.width = frame.height = frame.scale = 100.0;
    frame.flip_y = true;
    return write_svg(unpack(templ, params), frame);
}

json record_json(const GlyphRecord& r) {
    return {{"id", r.id}, {"class", r.class_label}, {"params", r.params}, {"font", r.font}};
}

// Parsed JSON body; errors map to 400 with the byte offset.
json parse_body(std::string_view body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON body: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed JSON body: ") + e.what(), 0);
    }
}

ScalarField inline_field(const json& f) {
    const auto dims = f.at("dims").get<std::vector<std::size_t>>();
    const auto origin = f.at("origin").get<std::vector<double>>();
    const auto spacing = f.at("spacing").get<std::vector<double>>();
    auto values = f.at("values").get<std::vector<double>>();
    if (dims.size() != 2 || origin.size() != 2 || spacing.size() != 2) throw Error("field must be 2D");
    GridSpec g;
    g.rank = 2;
    for (int a = 0; a < 2; ++a) {
        g.dims[a] = dims[a];
        g.origin[a] = origin[a];
        g.spacing[a] = spacing[a];
    }
    g.validate();
    if (values.size() != g.cell_count()) throw Error("field values do not match dims");
    return ScalarField(g, std::move(values));
}

}  // namespace

Service::Service(Catalog catalog, TemplateLibrary templates, ServiceConfig cfg)
    : catalog_(std::move(catalog)), templates_(std::move(templates)), cfg_(cfg),
      impl_(std::make_unique<Impl>(cfg.max_concurrent_fits)) {
    if (sodium_init() < 0) throw Error("libsodium failed to initialize");
    if (cfg_.page_size == 0) throw Error("page size must be positive");
}

Service::~Service() = default;

std::optional<GlyphTemplate> Service::template_for(const std::string& label) const {
    try {
        return resolve_template(label, templates_);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::optional<std::size_t> Service::expected_length(const std::string& label) const {
    if (const auto t = template_for(label)) return t->parameter_count(false);
    const auto recs = catalog_.by_class(label);
    if (!recs.empty()) return recs.front()->params.size();
    return std::nullopt;
}

HttpResponse Service::glyphs(const std::map<std::string, std::string>& query) const {
    std::size_t page = 1;
    if (const auto it = query.find("page"); it != query.end()) {
        const auto& s = it->second;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), page);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || page == 0) {
            return error_reply(400, "page must be a positive integer");
        }
    }
    std::vector<const GlyphRecord*> recs;
    std::optional<std::string> label;
    if (const auto it = query.find("class"); it != query.end()) {
        label = it->second;
        recs = catalog_.by_class(*label);
        if (recs.empty()) return error_reply(400, "unknown class '" + *label + "'");
    } else {
        for (const auto& r : catalog_.records()) recs.push_back(&r);
    }
    const std::size_t pages = (recs.size() + cfg_.page_size - 1) / cfg_.page_size;
    if (page > pages) return error_reply(404, "page " + std::to_string(page) + " is empty");

    json items = json::array();
    const std::size_t begin = (page - 1) * cfg_.page_size;
    const std::size_t end = std::min(recs.size(), begin + cfg_.page_size);
    for (std::size_t i = begin; i < end; ++i) {
        json item = record_json(*recs[i]);
        const auto templ = template_for(recs[i]->class_label);
        if (templ && templ->parameter_count(false) == recs[i]->params.size()) {
            item["svg"] = preview_svg(*templ, recs[i]->params);
        } else {
            item["svg"] = nullptr;
        }
        items.push_back(std::move(item));
    }
    return reply(200, {{"class", label ? json(*label) : json(nullptr)},
                       {"page", page},
                       {"page_size", cfg_.page_size},
                       {"pages", pages},
                       {"total", recs.size()},
                       {"glyphs", items}});
}

HttpResponse Service::nearest(std::string_view body) const {
    std::vector<double> params;
    std::size_t k = 5;
    std::optional<std::string> label;
    try {
        const json req = parse_body(body);
        if (!req.is_object()) return error_reply(400, "request body must be a JSON object");
        params = req.at("params").get<std::vector<double>>();
        if (req.contains("k")) {
            if (!req["k"].is_number_integer() || req["k"].get<long long>() < 1) {
                return error_reply(400, "k must be a positive integer");
            }
            k = req["k"].get<std::size_t>();
        }
        if (req.contains("class") && !req["class"].is_null()) label = req["class"].get<std::string>();
    } catch (const ParseError& e) {
        return error_reply(400, e.what(), e.offset());
    } catch (const json::exception& e) {
        return error_reply(400, std::string("invalid request: ") + e.what());
    }
    for (double v : params) {
        if (!std::isfinite(v)) return error_reply(400, "params must be finite");
    }

    if (label) {
        const auto n = expected_length(*label);
        if (n && *n != params.size()) {
            return error_reply(400, "class '" + *label + "' expects " + std::to_string(*n) + " params, got " +
                                        std::to_string(params.size()));
        }
        if (catalog_.by_class(*label).empty()) return error_reply(422, "no catalog records of class '" + *label + "'");
    } else {
        if (catalog_.empty()) return error_reply(422, "catalog is empty");
        const bool any = std::any_of(catalog_.records().begin(), catalog_.records().end(),
                                     [&](const GlyphRecord& r) { return r.params.size() == params.size(); });
        if (!any) return error_reply(400, "no catalog record has " + std::to_string(params.size()) + " params");
    }

    const auto matches = dfit::nearest(catalog_, params, k, label);
    json rows = json::array();
    for (std::size_t i = 0; i < matches.size(); ++i) {
        json row = record_json(*matches[i].record);
        row["rank"] = i + 1;
        row["distance"] = matches[i].distance;
        rows.push_back(std::move(row));
    }
    return reply(200, {{"query", params}, {"k", k}, {"class", label ? json(*label) : json(nullptr)}, {"matches", rows}});
}

HttpResponse Service::fit2d(std::string_view body) const {
    if (body.size() > cfg_.max_payload_bytes) return error_reply(413, "payload exceeds 1 MiB");

    std::optional<ScalarField> target;
    GlyphTemplate templ;
    FitConfig fit_cfg;
    fit_cfg.max_iters = cfg_.fit_iteration_cap;
    fit_cfg.grid_2d = cfg_.fit_grid;
    fit_cfg.loss.template_decay_s = cfg_.fit_template_decay_s;
    try {
        const json req = parse_body(body);
        if (!req.is_object()) return error_reply(400, "request body must be a JSON object");
        const auto label = req.at("class").get<std::string>();
        const auto t = template_for(label);
        if (!t) return error_reply(400, "unknown class '" + label + "'");
        templ = *t;

        const int sources = static_cast<int>(req.contains("pgm_base64")) + static_cast<int>(req.contains("field_base64")) +
                            static_cast<int>(req.contains("field"));
        if (sources != 1) return error_reply(400, "exactly one of pgm_base64, field_base64 or field is required");
        if (req.contains("pgm_base64")) {
            const Image img = read_pgm(base64_decode(req["pgm_base64"].get<std::string>()));
            const auto segs = contour_segments(img);
            if (segs.empty()) return error_reply(400, "raster has no ink");
            target = rasterize_distance_2d(segs, glyph_grid(cfg_.fit_grid));
        } else if (req.contains("field_base64")) {
            target = read_field(base64_decode(req["field_base64"].get<std::string>()));
            if (target->grid().rank != 2) return error_reply(400, "field must be 2D");
        } else {
            target = inline_field(req["field"]);
        }
        fit_cfg.grid_2d = target->grid().dims[0];

        if (req.contains("iterations")) {
            const int it = req["iterations"].get<int>();
            if (it < 1) return error_reply(400, "iterations must be positive");
            fit_cfg.max_iters = std::min(it, cfg_.fit_iteration_cap);
        }
        if (req.contains("seed")) fit_cfg.seed = req["seed"].get<std::uint64_t>();
        if (req.contains("template_decay_s")) fit_cfg.loss.template_decay_s = req["template_decay_s"].get<int>();
        if (req.contains("thickness")) fit_cfg.thickness_enabled = req["thickness"].get<bool>();
        fit_cfg.validate();
    } catch (const ParseError& e) {
        return error_reply(400, e.what(), e.offset());
    } catch (const json::exception& e) {
        return error_reply(400, std::string("invalid request: ") + e.what());
    } catch (const Error& e) {
        return error_reply(400, e.what());
    }

    impl_->fit_slots.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{impl_->fit_slots};

    std::optional<Fit2DResult> result;
    try {
        result = dfit::fit2d(*target, templ, fit_cfg);
    } catch (const Error& e) {
        return error_reply(400, e.what());
    }
    const FitReport& rep = result->report;
    if (rep.best_iteration < 0 || !std::isfinite(rep.best.total)) {
        return error_reply(408, "no finite loss within " + std::to_string(fit_cfg.max_iters) + " iterations" +
                                    (rep.message.empty() ? "" : ": " + rep.message));
    }
    const std::size_t np = templ.parameter_count(false);
    std::vector<double> params(rep.final_params.begin(), rep.final_params.begin() + static_cast<std::ptrdiff_t>(np));
    json out{{"class", templ.class_label},
             {"params", params},
             {"svg", preview_svg(templ, rep.final_params)},
             {"loss",
              {{"surface", rep.best.surface},
               {"align", rep.best.align},
               {"template", rep.best.template_term},
               {"total", rep.best.total}}},
             {"iterations", rep.history.size()},
             {"best_iteration", rep.best_iteration},
             {"termination", to_string(rep.termination)}};
    if (fit_cfg.thickness_enabled) {
        out["thickness"] = std::vector<double>(rep.final_params.begin() + static_cast<std::ptrdiff_t>(np),
                                               rep.final_params.end());
    }
    return reply(200, out);
}

HttpResponse Service::handle(const std::string& method, const std::string& path,
                             const std::map<std::string, std::string>& query, std::string_view body) const {
    if (path == "/glyphs") {
        if (method != "GET") return error_reply(405, "use GET");
        return glyphs(query);
    }
    if (path == "/nearest") {
        if (method != "POST") return error_reply(405, "use POST");
        return nearest(body);
    }
    if (path == "/fit2d") {
        if (method != "POST") return error_reply(405, "use POST");
        return fit2d(body);
    }
    return error_reply(404, "no such endpoint: " + path);
}

void Service::configure_server() {
    auto& srv = impl_->server;
    if (impl_->configured) return;
    impl_->configured = true;
    srv.set_payload_max_length(cfg_.max_payload_bytes + 1);
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    const auto route = [this](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query.emplace(k, v);
        const HttpResponse r = handle(req.method, req.path, query, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    for (const char* path : {"/glyphs", "/nearest", "/fit2d"}) {
        srv.Get(path, route);
        srv.Post(path, route);
        srv.Put(path, route);
        srv.Delete(path, route);
    }
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        const std::string msg = res.status == 413 ? "payload exceeds 1 MiB" : "no such endpoint: " + req.path;
        res.set_content(json{{"error", msg}}.dump() + "\n", "application/json");
    });
}

bool Service::listen(const std::string& host, int port) {
    configure_server();
    return impl_->server.listen(host, port);
}

int Service::bind(const std::string& host, int port) {
    configure_server();
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::serve() { return impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() { impl_->server.stop(); }

}  // namespace dfit
