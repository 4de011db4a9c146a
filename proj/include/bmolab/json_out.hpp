#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bmolab {

/// Minimal ordered JSON value for report emission.  Keys keep insertion
/// order and floating-point values are written with 17 significant digits,
/// so equal reports serialize to identical bytes.
class JsonValue {
public:
    JsonValue() : kind_(Kind::null) {}
    JsonValue(bool b) : kind_(Kind::boolean), bool_(b) {}
    JsonValue(double d);
    JsonValue(std::int64_t i) : kind_(Kind::integer), int_(i) {}
    JsonValue(int i) : JsonValue(static_cast<std::int64_t>(i)) {}
    JsonValue(std::uint64_t u) : kind_(Kind::uinteger), uint_(u) {}
    JsonValue(const char* s) : kind_(Kind::string), str_(s) {}
    JsonValue(std::string s) : kind_(Kind::string), str_(std::move(s)) {}

    static JsonValue object();
    static JsonValue array();

    /// Object member (insertion order preserved); returns *this for chaining.
    JsonValue& set(const std::string& key, JsonValue value);
    /// Array element.
    JsonValue& push(JsonValue value);

    static JsonValue number_array(const std::vector<double>& values);

    std::string dump(int indent = 2) const;

private:
    enum class Kind { null, boolean, integer, uinteger, number, string, array, object };

    void write(std::string& out, int indent, int depth) const;

    Kind kind_;
    bool bool_ = false;
    std::int64_t int_ = 0;
    std::uint64_t uint_ = 0;
    double num_ = 0.0;
    std::string str_;
    std::vector<JsonValue> items_;
    std::vector<std::pair<std::string, JsonValue>> members_;
};

/// fnv-1a 64-bit content hash, for audit ids in reports.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string fnv1a_hex(std::string_view bytes);

} // namespace bmolab
