#include "identrank/json_out.hpp"

#include <cmath>
#include <cstdio>

namespace identrank {

namespace {

void write_string(std::string &out, const std::string &s) {
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (c < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += static_cast<char>(c);
            }
        }
    }
    out += '"';
}

void newline(std::string &out, int indent, int depth) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * depth), ' ');
}

bool is_scalar_array(const JsonValue::Array &a) {
    for (const auto &v : a)
        if (v.is_array() || v.is_object()) return false;
    return true;
}

} // namespace

std::string format_double(double d) {
    if (!std::isfinite(d)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    std::string s(buf);
    // Keep a marker that this is a real number.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

JsonValue JsonValue::numbers(const std::vector<double> &xs) {
    Array a;
    a.reserve(xs.size());
    for (double x : xs) a.emplace_back(x);
    return JsonValue(std::move(a));
}

JsonValue JsonValue::strings(const std::vector<std::string> &xs) {
    Array a;
    a.reserve(xs.size());
    for (const auto &x : xs) a.emplace_back(x);
    return JsonValue(std::move(a));
}

JsonValue &JsonValue::set(std::string key, JsonValue value) {
    std::get<Object>(v_).emplace_back(std::move(key), std::move(value));
    return *this;
}

JsonValue &JsonValue::push(JsonValue value) {
    std::get<Array>(v_).push_back(std::move(value));
    return *this;
}

const JsonValue *JsonValue::find(const std::string &key) const {
    if (!is_object()) return nullptr;
    for (const auto &[k, v] : as_object())
        if (k == key) return &v;
    return nullptr;
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
}

std::string JsonValue::dump_compact() const {
    std::string out;
    write(out, -1, 0);
    return out;
}

void JsonValue::write(std::string &out, int indent, int depth) const {
    const char *colon = indent < 0 ? ":" : ": ";
    std::visit(
        [&](const auto &v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::nullptr_t>) {
                out += "null";
            } else if constexpr (std::is_same_v<T, bool>) {
                out += v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                out += std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                out += format_double(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                write_string(out, v);
            } else if constexpr (std::is_same_v<T, Array>) {
                if (v.empty()) {
                    out += "[]";
                    return;
                }
                // Arrays of scalars stay on one line.
                const bool flat = indent < 0 || is_scalar_array(v);
                out += '[';
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += flat && indent >= 0 ? ", " : ",";
                    if (!flat) newline(out, indent, depth + 1);
                    v[i].write(out, indent, depth + 1);
                }
                if (!flat) newline(out, indent, depth);
                out += ']';
            } else {
                if (v.empty()) {
                    out += "{}";
                    return;
                }
                out += '{';
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ',';
                    newline(out, indent, depth + 1);
                    write_string(out, v[i].first);
                    out += colon;
                    v[i].second.write(out, indent, depth + 1);
                }
                newline(out, indent, depth);
                out += '}';
            }
        },
        v_);
}

std::string JsonValue::dump_text() const {
    std::string out;
    write_text(out, 0);
    return out;
}

void JsonValue::write_text(std::string &out, int depth) const {
    const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
    if (is_object()) {
        for (const auto &[k, v] : as_object()) {
            out += pad + k + ':';
            if ((v.is_object() && !v.as_object().empty()) || (v.is_array() && !is_scalar_array(v.as_array()))) {
                out += '\n';
                v.write_text(out, depth + 1);
            } else {
                out += ' ' + v.dump_compact() + '\n';
            }
        }
    } else if (is_array()) {
        const auto &a = as_array();
        for (std::size_t i = 0; i < a.size(); ++i) {
            out += pad + "- [" + std::to_string(i) + "]";
            if (a[i].is_object() || a[i].is_array()) {
                out += '\n';
                a[i].write_text(out, depth + 1);
            } else {
                out += ' ' + a[i].dump_compact() + '\n';
            }
        }
    } else {
        out += pad + dump_compact() + '\n';
    }
}

} // namespace identrank
