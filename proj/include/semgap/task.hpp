#pragma once

#include <string>
#include <string_view>

namespace semgap {

enum class Task { Wic, Ner, Analogy };
enum class ModelFamily { Encoder, Decoder, EncoderDecoder };
enum class Method { Query, Probe };

std::string_view to_string(Task task);
std::string_view to_string(ModelFamily family);
std::string_view to_string(Method method);

// InvalidArgument on unknown names. Accepts the lowercase forms produced by
// to_string ("wic", "ner", "analogy"; "encoder", "decoder",
// "encoder-decoder"; "query", "probe").
Task parse_task(std::string_view name);
ModelFamily parse_family(std::string_view name);
Method parse_method(std::string_view name);

}  // namespace semgap
