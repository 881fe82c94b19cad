#pragma once

#include <iosfwd>
#include <string>

namespace persona {

class PersonaModel;

// Text container, one record per line:
//
//   persona-checkpoint 1
//   config <ModelConfig::serialize()>
//   seed <u64>
//   speakers <n>            followed by n lines, one speaker id each
//   ocean <n>               followed by n lines `speaker<TAB>o,c,e,a,n`
//   params <n>              followed by n records:
//     param <name> <rank> <dim>...
//     <values, space separated, shortest round-trip decimal>
//   end
//
// Values round-trip exactly, so a reloaded model reproduces every output
// bit for bit.
void save_checkpoint(const PersonaModel& model, std::ostream& out);
PersonaModel load_checkpoint(std::istream& in, const std::string& source = "<checkpoint>");

void save_checkpoint_file(const PersonaModel& model, const std::string& path);
PersonaModel load_checkpoint_file(const std::string& path);

}  // namespace persona
