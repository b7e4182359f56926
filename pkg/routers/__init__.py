# exit statuses shared by every command
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
