#include "lexcd/param_store.hpp"

namespace lexcd {

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace lexcd
