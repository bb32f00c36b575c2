#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "dfit/embedding.hpp"
#include "dfit/glyph_template.hpp"

namespace dfit {

struct ServiceConfig {
    std::size_t page_size = 50;
    /// Upper bound on iterations of a single /fit2d request.
    int fit_iteration_cap = 500;
    /// Request bodies above this size are refused with 413.
    std::size_t max_payload_bytes = std::size_t{1} << 20;
    /// Simultaneous /fit2d requests; further requests wait for a slot.
    unsigned max_concurrent_fits = 2;
    std::size_t fit_grid = 128;
    /// Template decay used by /fit2d unless the request overrides it.
    int fit_template_decay_s = 100;
};

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Request handlers over an immutable catalog and template set. Every
/// handler is a pure function of the catalog and the request.
class Service {
public:
    Service(Catalog catalog, TemplateLibrary templates, ServiceConfig cfg = {});
    ~Service();

    HttpResponse glyphs(const std::map<std::string, std::string>& query) const;
    HttpResponse nearest(std::string_view body) const;
    HttpResponse fit2d(std::string_view body) const;

    /// Routes one request; unknown paths give 404, wrong methods 405.
    HttpResponse handle(const std::string& method, const std::string& path,
                        const std::map<std::string, std::string>& query, std::string_view body) const;

    const Catalog& catalog() const { return catalog_; }
    const ServiceConfig& config() const { return cfg_; }

    /// Blocks serving HTTP/1.1 until stop() is called. Returns false if the
    /// socket could not be bound.
    bool listen(const std::string& host, int port);
    /// Binds without serving; port 0 picks a free port. Returns the bound
    /// port, or -1 on failure. Follow with serve().
    int bind(const std::string& host, int port);
    bool serve();
    void wait_until_ready() const;
    void stop();

private:
    void configure_server();
    std::optional<std::size_t> expected_length(const std::string& label) const;
    std::optional<GlyphTemplate> template_for(const std::string& label) const;

    Catalog catalog_;
    TemplateLibrary templates_;
    ServiceConfig cfg_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Standard base64 (whitespace ignored). Throws ParseError at the offending
/// character.
std::string base64_decode(std::string_view text);
std::string base64_encode(std::string_view bytes);

}  // namespace dfit
