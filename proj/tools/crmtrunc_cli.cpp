#include "crmtrunc/bounds.hpp"
int main(){return 0;}
