"""Placeholder for the 2011 Finnish parliamentary election questionnaire data.

The data are the answers of 1806 candidates to eight questions of the
Helsingin Sanomat voting-advice questionnaire (HS vaalikone 2011), each
recoded to 0/1.  No stable public download location is known, so nothing
is fetched.  To use the data, obtain the candidate answer file from
Helsingin Sanomat, recode the eight questions to binary columns Q1..Q8 and
save it as a CSV with a header row; ``sgm search --data election.csv``
then runs directly on it.

"""
import sys

if __name__ == "__main__":
    sys.exit(__doc__)
