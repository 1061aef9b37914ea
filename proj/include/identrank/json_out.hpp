#pragma once

// Minimal JSON value for report output. Objects keep insertion order and
// doubles are printed with 17 significant digits, so identical inputs give
// byte-identical files.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace identrank {

class JsonValue {
public:
    using Array = std::vector<JsonValue>;
    using Object = std::vector<std::pair<std::string, JsonValue>>;

    JsonValue() : v_(nullptr) {}
    JsonValue(std::nullptr_t) : v_(nullptr) {}
    JsonValue(bool b) : v_(b) {}
    JsonValue(int i) : v_(static_cast<std::int64_t>(i)) {}
    JsonValue(std::int64_t i) : v_(i) {}
    JsonValue(std::size_t i) : v_(static_cast<std::int64_t>(i)) {}
    JsonValue(double d) : v_(d) {}
    JsonValue(const char *s) : v_(std::string(s)) {}
    JsonValue(std::string s) : v_(std::move(s)) {}
    JsonValue(Array a) : v_(std::move(a)) {}
    JsonValue(Object o) : v_(std::move(o)) {}

    static JsonValue object() { return JsonValue(Object{}); }
    static JsonValue array() { return JsonValue(Array{}); }
    static JsonValue numbers(const std::vector<double> &xs);
    static JsonValue strings(const std::vector<std::string> &xs);

    // Appends a key to an object. Keys are not deduplicated.
    JsonValue &set(std::string key, JsonValue value);
    JsonValue &push(JsonValue value);

    bool is_object() const { return std::holds_alternative<Object>(v_); }
    bool is_array() const { return std::holds_alternative<Array>(v_); }
    const Object &as_object() const { return std::get<Object>(v_); }
    const Array &as_array() const { return std::get<Array>(v_); }
    const JsonValue *find(const std::string &key) const;

    std::string dump(int indent = 2) const;
    // One line, no spaces; used for JSON-lines output.
    std::string dump_compact() const;
    // Indented "key: value" rendering of the same tree.
    std::string dump_text() const;

private:
    void write(std::string &out, int indent, int depth) const;
    void write_text(std::string &out, int depth) const;

    std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Array, Object> v_;
};

std::string format_double(double d);

} // namespace identrank
