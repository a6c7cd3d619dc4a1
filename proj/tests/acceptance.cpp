#include "crmtrunc/validate.hpp"
#include "crmtrunc/ncrm.hpp"
int main(){return 0;}
