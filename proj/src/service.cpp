#include "vidsearch/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vidsearch/error.hpp"

namespace vidsearch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::optional<std::string> env(const char* name) {
    if (const char* v = std::getenv(name); v && *v) return std::string(v);
    return std::nullopt;
}

HttpReply json_reply(int status, const json& body) {
    HttpReply r;
    r.status = status;
    r.body = body.dump();
    return r;
}

HttpReply error_reply(int status, std::string_view message) {
    return json_reply(status, json{{"error", std::string(message)}});
}

bool parse_uint(std::string_view s, std::uintmax_t& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig c;
    if (auto v = env("INDEX_PATH")) c.index_path = *v;
    if (auto v = env("MEDIA_ROOT")) c.media_root = *v;
    if (auto v = env("STATIC_ROOT")) c.static_root = *v;
    if (auto v = env("PORT")) {
        std::uintmax_t p = 0;
        if (!parse_uint(*v, p) || p > 65535) throw InvalidInputError("PORT must be an integer in [0, 65535]");
        c.port = static_cast<int>(p);
    }
    if (auto v = env("TLS_CERT")) c.tls_cert = *v;
    if (auto v = env("TLS_KEY")) c.tls_key = *v;
    if (auto v = env("STT_BACKEND")) c.stt_backend = *v;
    if (auto v = env("STT_URL")) c.stt_url = *v;
    if (auto v = env("MOCK_TRANSCRIPT")) c.mock_transcript = *v;
    return c;
}

void ServiceConfig::validate() const {
    if (media_root.empty() || !fs::is_directory(media_root)) {
        throw InvalidInputError("media root does not exist: " + media_root.string());
    }
    if (k_default < 1) throw InvalidInputError("k_default must be at least 1");
    if (tls_cert.has_value() != tls_key.has_value()) {
        throw InvalidInputError("TLS needs both a certificate and a key");
    }
    if (stt_backend != "mock" && stt_backend != "remote") {
        throw InvalidInputError("unknown STT backend: " + stt_backend);
    }
    if (stt_backend == "remote" && stt_url.empty()) {
        throw InvalidInputError("remote STT backend needs STT_URL");
    }
}

std::unique_ptr<SpeechToText> make_speech_client(const ServiceConfig& config) {
    if (config.stt_backend == "remote") return std::make_unique<RemoteSpeechToText>(config.stt_url);
    return std::make_unique<EchoSpeechToText>(config.mock_transcript);
}

RangeParse parse_byte_range(std::string_view header, std::uintmax_t size, ByteRange& out) {
    constexpr std::string_view kUnit = "bytes=";
    if (header.size() < kUnit.size()) return RangeParse::unsatisfiable;
    for (std::size_t i = 0; i < kUnit.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(header[i])) != kUnit[i]) {
            return RangeParse::unsatisfiable;
        }
    }
    std::string_view spec = header.substr(kUnit.size());
    while (!spec.empty() && spec.front() == ' ') spec.remove_prefix(1);
    while (!spec.empty() && spec.back() == ' ') spec.remove_suffix(1);
    if (spec.find(',') != spec.npos) return RangeParse::whole;
    const auto dash = spec.find('-');
    if (dash == spec.npos) return RangeParse::unsatisfiable;
    const auto first_s = spec.substr(0, dash);
    const auto last_s = spec.substr(dash + 1);

    if (first_s.empty()) {
        std::uintmax_t suffix = 0;
        if (!parse_uint(last_s, suffix) || suffix == 0 || size == 0) return RangeParse::unsatisfiable;
        suffix = std::min(suffix, size);
        out = {size - suffix, suffix};
        return RangeParse::satisfiable;
    }
    std::uintmax_t first = 0;
    if (!parse_uint(first_s, first) || first >= size) return RangeParse::unsatisfiable;
    std::uintmax_t last = size - 1;
    if (!last_s.empty()) {
        if (!parse_uint(last_s, last) || last < first) return RangeParse::unsatisfiable;
        last = std::min(last, size - 1);
    }
    out = {first, last - first + 1};
    return RangeParse::satisfiable;
}

std::string content_type_for(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".mp4" || ext == ".m4v") return "video/mp4";
    if (ext == ".webm") return "video/webm";
    if (ext == ".ogv" || ext == ".ogg") return "video/ogg";
    if (ext == ".mkv") return "video/x-matroska";
    if (ext == ".mov") return "video/quicktime";
    if (ext == ".avi") return "video/x-msvideo";
    if (ext == ".ts") return "video/mp2t";
    if (ext == ".ppm") return "image/x-portable-pixmap";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".png") return "image/png";
    if (ext == ".json") return "application/json";
    return "application/octet-stream";
}

SearchService::SearchService(std::shared_ptr<const SearchIndex> index, fs::path media_root,
                             std::shared_ptr<const SpeechToText> speech, std::size_t k_default,
                             MatcherConfig matcher)
    : index_(index ? std::move(index) : std::make_shared<const SearchIndex>()),
      media_root_(std::move(media_root)),
      speech_(std::move(speech)),
      k_default_(k_default),
      matcher_(std::move(matcher)) {
    if (k_default_ < 1) throw InvalidInputError("k_default must be at least 1");
    if (!speech_) speech_ = std::make_shared<EchoSpeechToText>();
}

std::shared_ptr<const SearchIndex> SearchService::index() const {
    std::lock_guard lock(index_mutex_);
    return index_;
}

void SearchService::replace_index(std::shared_ptr<const SearchIndex> index) {
    if (!index) throw InvalidInputError("replacement index is null");
    std::lock_guard lock(index_mutex_);
    index_ = std::move(index);
}

std::optional<std::size_t> SearchService::parse_k(const std::optional<std::string>& k) const {
    if (!k) return k_default_;
    std::uintmax_t v = 0;
    if (!parse_uint(*k, v) || v < 1) return std::nullopt;
    return static_cast<std::size_t>(v);
}

HttpReply SearchService::handle_transcribe(std::string_view body, std::string_view mime,
                                           std::string_view hint) const {
    if (body.empty()) return error_reply(400, "empty audio body");
    std::string transcript;
    try {
        transcript = speech_->transcribe({std::string(body), std::string(mime), std::string(hint)});
    } catch (const std::exception& e) {
        return error_reply(502, std::string("speech-to-text failed: ") + e.what());
    }
    return json_reply(200, json{{"transcript", transcript}});
}

HttpReply SearchService::handle_search(const std::optional<std::string>& q,
                                       const std::optional<std::string>& k) const {
    if (!q) return error_reply(400, "missing query parameter q");
    const auto kk = parse_k(k);
    if (!kk) return error_reply(400, "k must be a positive integer");
    const auto idx = index();
    try {
        return json_reply(200, results_to_json(idx->rank(*q, *kk, matcher_)));
    } catch (const InvalidQueryError& e) {
        return error_reply(400, e.what());
    }
}

HttpReply SearchService::handle_query(std::string_view body, std::string_view mime,
                                      std::string_view hint,
                                      const std::optional<std::string>& k) const {
    const auto kk = parse_k(k);
    if (!kk) return error_reply(400, "k must be a positive integer");
    HttpReply t = handle_transcribe(body, mime, hint);
    if (t.status != 200) return t;
    const std::string transcript = json::parse(t.body)["transcript"].get<std::string>();
    json results = json::array();
    if (!tokenize(transcript).empty()) results = results_to_json(index()->rank(transcript, *kk, matcher_));
    return json_reply(200, json{{"transcript", transcript}, {"results", std::move(results)}});
}

MediaReply SearchService::serve_media(std::string_view clip_path,
                                      const std::optional<std::string>& range_header) const {
    MediaReply r;
    const fs::path rel{std::string(clip_path)};
    if (clip_path.empty() || rel.is_absolute() || rel.has_root_name() || rel.has_root_directory()) {
        r.status = 403;
        r.message = "path outside media root";
        return r;
    }
    for (const auto& part : rel) {
        if (part == "..") {
            r.status = 403;
            r.message = "path outside media root";
            return r;
        }
    }
    std::error_code ec;
    const fs::path root = fs::weakly_canonical(media_root_, ec);
    const fs::path target = fs::weakly_canonical(media_root_ / rel, ec);
    if (ec) {
        r.status = 404;
        r.message = "not found";
        return r;
    }
    // Symlinks may still point outside the root.
    auto [mr, mt] = std::mismatch(root.begin(), root.end(), target.begin(), target.end());
    if (mr != root.end()) {
        r.status = 403;
        r.message = "path outside media root";
        return r;
    }
    if (!fs::is_regular_file(target, ec)) {
        r.status = 404;
        r.message = "not found";
        return r;
    }
    r.file = target;
    r.total = fs::file_size(target, ec);
    if (ec) {
        r.status = 404;
        r.message = "not found";
        return r;
    }
    r.content_type = content_type_for(target);
    r.offset = 0;
    r.length = r.total;
    r.status = 200;
    if (range_header) {
        ByteRange br;
        switch (parse_byte_range(*range_header, r.total, br)) {
            case RangeParse::whole: break;
            case RangeParse::satisfiable:
                r.status = 206;
                r.offset = br.offset;
                r.length = br.length;
                break;
            case RangeParse::unsatisfiable:
                r.status = 416;
                r.length = 0;
                r.message = "range not satisfiable";
                break;
        }
    }
    return r;
}

HttpServer::HttpServer(std::shared_ptr<SearchService> service, const ServiceConfig& config)
    : service_(std::move(service)) {
    if (config.tls_cert && config.tls_key) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        auto ssl = std::make_unique<httplib::SSLServer>(config.tls_cert->c_str(), config.tls_key->c_str());
        if (!ssl->is_valid()) throw InvalidInputError("could not load TLS certificate/key");
        server_ = std::move(ssl);
        tls_ = true;
#else
        throw InvalidInputError("built without TLS support");
#endif
    } else {
        server_ = std::make_unique<httplib::Server>();
    }
    install_routes(config);
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes(const ServiceConfig& config) {
    auto& srv = *server_;
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        for (const auto& [k, v] : reply.headers) res.set_header(k, v);
        res.set_content(reply.body, reply.content_type);
    };
    auto opt_param = [](const httplib::Request& req, const char* name) -> std::optional<std::string> {
        if (!req.has_param(name)) return std::nullopt;
        return req.get_param_value(name);
    };
    auto svc = service_;

    srv.Post("/api/transcribe", [svc, send](const httplib::Request& req, httplib::Response& res) {
        send(res, svc->handle_transcribe(req.body, req.get_header_value("Content-Type"),
                                         req.get_header_value("X-Mock-Transcript")));
    });
    srv.Get("/api/search", [svc, send, opt_param](const httplib::Request& req, httplib::Response& res) {
        send(res, svc->handle_search(opt_param(req, "q"), opt_param(req, "k")));
    });
    srv.Post("/api/query", [svc, send, opt_param](const httplib::Request& req, httplib::Response& res) {
        send(res, svc->handle_query(req.body, req.get_header_value("Content-Type"),
                                    req.get_header_value("X-Mock-Transcript"), opt_param(req, "k")));
    });
    srv.Get(R"(/media/(.+))", [svc](const httplib::Request& req, httplib::Response& res) {
        // Ranges are resolved by serve_media; stop httplib from slicing the
        // body a second time. The request object itself is not const.
        const_cast<httplib::Request&>(req).ranges.clear();
        std::optional<std::string> range;
        if (req.has_header("Range")) range = req.get_header_value("Range");
        const MediaReply m = svc->serve_media(req.matches[1].str(), range);
        res.status = m.status;
        res.set_header("Accept-Ranges", "bytes");
        if (m.status == 416) {
            res.set_header("Content-Range", "bytes */" + std::to_string(m.total));
            res.set_content(json{{"error", m.message}}.dump(), "application/json");
            return;
        }
        if (m.status != 200 && m.status != 206) {
            res.set_content(json{{"error", m.message}}.dump(), "application/json");
            return;
        }
        if (m.status == 206) {
            res.set_header("Content-Range", "bytes " + std::to_string(m.offset) + "-" +
                                                std::to_string(m.offset + m.length - 1) + "/" +
                                                std::to_string(m.total));
        }
        auto file = std::make_shared<std::ifstream>(m.file, std::ios::binary);
        if (!*file || m.length == 0) {
            res.set_content("", m.content_type);
            return;
        }
        const auto start = m.offset;
        res.set_content_provider(
            static_cast<std::size_t>(m.length), m.content_type,
            [file, start](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
                std::vector<char> buf(std::min<std::size_t>(length, 1 << 16));
                file->seekg(static_cast<std::streamoff>(start + offset));
                file->read(buf.data(), static_cast<std::streamsize>(buf.size()));
                const auto got = static_cast<std::size_t>(file->gcount());
                if (got == 0) return false;
                return sink.write(buf.data(), got);
            });
    });
    if (!config.static_root.empty()) {
        if (!srv.set_mount_point("/", config.static_root.string())) {
            throw InvalidInputError("static root does not exist: " + config.static_root.string());
        }
    }
}

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace vidsearch
