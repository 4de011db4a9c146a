#include "bmolab/json_out.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bmolab {

JsonValue::JsonValue(double d) : kind_(Kind::number), num_(d) {
    if (!std::isfinite(d))
        throw std::invalid_argument("JsonValue: reports never carry non-finite numbers");
}

JsonValue JsonValue::object() {
    JsonValue v;
    v.kind_ = Kind::object;
    return v;
}

JsonValue JsonValue::array() {
    JsonValue v;
    v.kind_ = Kind::array;
    return v;
}

JsonValue& JsonValue::set(const std::string& key, JsonValue value) {
    if (kind_ != Kind::object) throw std::logic_error("JsonValue::set on non-object");
    members_.emplace_back(key, std::move(value));
    return *this;
}

JsonValue& JsonValue::push(JsonValue value) {
    if (kind_ != Kind::array) throw std::logic_error("JsonValue::push on non-array");
    items_.push_back(std::move(value));
    return *this;
}

JsonValue JsonValue::number_array(const std::vector<double>& values) {
    JsonValue arr = array();
    for (double v : values) arr.push(JsonValue(v));
    return arr;
}

namespace {

void write_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    out += '"';
}

void newline_indent(std::string& out, int indent, int depth) {
    out += '\n';
    out.append(static_cast<std::size_t>(indent) * depth, ' ');
}

} // namespace

void JsonValue::write(std::string& out, int indent, int depth) const {
    switch (kind_) {
    case Kind::null:
        out += "null";
        break;
    case Kind::boolean:
        out += bool_ ? "true" : "false";
        break;
    case Kind::integer:
        out += std::to_string(int_);
        break;
    case Kind::uinteger:
        out += std::to_string(uint_);
        break;
    case Kind::number: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", num_);
        out += buf;
        break;
    }
    case Kind::string:
        write_escaped(out, str_);
        break;
    case Kind::array: {
        if (items_.empty()) {
            out += "[]";
            break;
        }
        out += '[';
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (i) out += ',';
            newline_indent(out, indent, depth + 1);
            items_[i].write(out, indent, depth + 1);
        }
        newline_indent(out, indent, depth);
        out += ']';
        break;
    }
    case Kind::object: {
        if (members_.empty()) {
            out += "{}";
            break;
        }
        out += '{';
        for (std::size_t i = 0; i < members_.size(); ++i) {
            if (i) out += ',';
            newline_indent(out, indent, depth + 1);
            write_escaped(out, members_[i].first);
            out += ": ";
            members_[i].second.write(out, indent, depth + 1);
        }
        newline_indent(out, indent, depth);
        out += '}';
        break;
    }
    }
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state) {
    for (char c : bytes) {
        state ^= static_cast<unsigned char>(c);
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::string fnv1a_hex(std::string_view bytes) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

} // namespace bmolab
