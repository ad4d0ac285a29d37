#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vidsearch/index_search.hpp"
#include "vidsearch/meteor.hpp"
#include "vidsearch/speech.hpp"

namespace httplib {
class Server;
}

namespace vidsearch {

struct ServiceConfig {
    std::filesystem::path index_path;
    std::filesystem::path media_root;
    std::filesystem::path static_root;  // optional; served at "/"
    std::string host = "0.0.0.0";
    int port = 8080;
    std::size_t k_default = kDefaultTopK;
    std::optional<std::filesystem::path> tls_cert;
    std::optional<std::filesystem::path> tls_key;
    std::string stt_backend = "mock";  // mock | remote
    std::string stt_url;               // remote backend base URL
    std::string mock_transcript;       // canned text for the mock backend

    /// INDEX_PATH, MEDIA_ROOT, STATIC_ROOT, PORT, TLS_CERT, TLS_KEY,
    /// STT_BACKEND, STT_URL, MOCK_TRANSCRIPT; unset variables keep defaults.
    static ServiceConfig from_env();

    /// Throws InvalidInputError if media_root is missing, k_default is 0,
    /// only one of cert/key is given or the STT backend is unknown.
    void validate() const;
};

std::unique_ptr<SpeechToText> make_speech_client(const ServiceConfig& config);

struct HttpReply {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

/// Outcome of a media request. For 200/206 the body is
/// [offset, offset + length) of file.
struct MediaReply {
    int status = 200;
    std::string content_type;
    std::filesystem::path file;
    std::uintmax_t offset = 0;
    std::uintmax_t length = 0;
    std::uintmax_t total = 0;
    std::string message;
};

struct ByteRange {
    std::uintmax_t offset = 0;
    std::uintmax_t length = 0;
};

enum class RangeParse { whole, satisfiable, unsatisfiable };

/// Single `bytes=` range against a file of `size` bytes. Multi-range
/// requests are answered with the whole body.
RangeParse parse_byte_range(std::string_view header, std::uintmax_t size, ByteRange& out);

std::string content_type_for(const std::filesystem::path& path);

/// Request handlers independent of the HTTP transport. Holds the index behind
/// a shared pointer so reloads swap it whole.
class SearchService {
public:
    SearchService(std::shared_ptr<const SearchIndex> index, std::filesystem::path media_root,
                  std::shared_ptr<const SpeechToText> speech,
                  std::size_t k_default = kDefaultTopK, MatcherConfig matcher = {});

    HttpReply handle_transcribe(std::string_view body, std::string_view mime,
                                std::string_view hint = {}) const;
    HttpReply handle_search(const std::optional<std::string>& q,
                            const std::optional<std::string>& k) const;
    HttpReply handle_query(std::string_view body, std::string_view mime, std::string_view hint,
                           const std::optional<std::string>& k) const;
    MediaReply serve_media(std::string_view clip_path,
                           const std::optional<std::string>& range_header) const;

    std::shared_ptr<const SearchIndex> index() const;
    void replace_index(std::shared_ptr<const SearchIndex> index);

    std::size_t k_default() const noexcept { return k_default_; }
    const std::filesystem::path& media_root() const noexcept { return media_root_; }

private:
    std::optional<std::size_t> parse_k(const std::optional<std::string>& k) const;

    mutable std::mutex index_mutex_;
    std::shared_ptr<const SearchIndex> index_;
    std::filesystem::path media_root_;
    std::shared_ptr<const SpeechToText> speech_;
    std::size_t k_default_;
    MatcherConfig matcher_;
};

/// httplib front end. Routes:
///   POST /api/transcribe, GET /api/search, POST /api/query, GET /media/<path>
/// and static files at "/" when a static root is configured.
class HttpServer {
public:
    HttpServer(std::shared_ptr<SearchService> service, const ServiceConfig& config);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;
    bool tls() const noexcept { return tls_; }

private:
    void install_routes(const ServiceConfig& config);

    std::shared_ptr<SearchService> service_;
    std::unique_ptr<httplib::Server> server_;
    bool tls_ = false;
};

}  // namespace vidsearch
