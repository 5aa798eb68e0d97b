#!/usr/bin/env python3
"""Writes data/desk_corpus.jsonl and data/desk_fixtures.jsonl from the programs below."""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent

PROBLEMS = {
    "q01-sum": ("easy", "Read an integer n followed by n integers. Print their sum."),
    "q02-max": ("easy", "Read an integer n followed by n integers (possibly negative). Print the largest one."),
    "q03-reverse": ("easy", "Read one line of text and print it reversed."),
    "q04-vowels": ("easy", "Read one line of text and print how many vowels (a, e, i, o, u, either case) it contains."),
    "q05-fizzbuzz": ("easy", "Read n and print the numbers 1..n, one per line, replacing multiples of 3 by Fizz, multiples of 5 by Buzz and multiples of both by FizzBuzz."),
    "q06-factorial": ("medium", "Read n (0 <= n <= 1000) and print n! modulo 1000000007."),
    "q07-prime": ("medium", "Read an integer n (n may be up to 10^12) and print YES if it is prime, otherwise NO."),
    "q08-fibonacci": ("medium", "Read n (0 <= n <= 90) and print the n-th Fibonacci number, with F(0)=0 and F(1)=1."),
    "q09-gcd": ("easy", "Read two non-negative integers a and b and print their greatest common divisor."),
    "q10-palindrome": ("medium", "Read one line and print YES if it reads the same backwards ignoring case and non-alphanumeric characters, otherwise NO."),
}

# (question, source_tag, verdict, text); verdict is documentation only: correct, buggy, broken
PYTHON = [
    ("q01-sum", "desk-a", "correct", '''import sys


def read_numbers():
    """Return the integers that follow the count on stdin."""
    data = sys.stdin.read().split()
    count = int(data[0])
    return [int(tok) for tok in data[1:1 + count]]


def main():
    numbers = read_numbers()
    total = 0
    for value in numbers:
        total += value
    print(total)


if __name__ == "__main__":
    main()
'''),
    ("q02-max", "desk-b", "buggy", '''import sys


def largest(values):
    best = 0  # start from zero
    for v in values:
        if v > best:
            best = v
    return best


def main():
    data = sys.stdin.read().split()
    n = int(data[0])
    values = [int(x) for x in data[1:n + 1]]
    print(largest(values))


main()
'''),
    ("q03-reverse", "desk-a", "correct", '''def reverse_text(line):
    """Reverse a line character by character."""
    out = []
    for ch in line:
        out.insert(0, ch)
    return "".join(out)


line = input()
print(reverse_text(line))
'''),
    ("q04-vowels", "desk-b", "correct", '''VOWELS = set("aeiouAEIOU")


def count_vowels(text):
    count = 0
    for ch in text:
        if ch in VOWELS:
            count += 1
    return count


def main():
    text = input()
    result = count_vowels(text)
    print(f"{result}")


if __name__ == "__main__":
    main()
'''),
    ("q05-fizzbuzz", "desk-a", "correct", '''def fizzbuzz(limit):
    lines = []
    for i in range(1, limit + 1):
        if i % 15 == 0:
            lines.append("FizzBuzz")
        elif i % 3 == 0:
            lines.append("Fizz")
        elif i % 5 == 0:
            lines.append("Buzz")
        else:
            lines.append(str(i))
    return lines


n = int(input())
for entry in fizzbuzz(n):
    print(entry)
'''),
    ("q06-factorial", "desk-b", "correct", '''MOD = 1_000_000_007


def factorial_mod(n):
    """n! modulo MOD."""
    acc = 1
    k = 2
    while k <= n:
        acc = acc * k % MOD
        k += 1
    return acc


def main():
    n = int(input().strip())
    print(factorial_mod(n))


main()
'''),
    ("q07-prime", "desk-a", "buggy", '''def is_prime(n):
    # trial division
    if n < 2:
        return False
    for d in range(2, int(n ** 0.5)):
        if n % d == 0:
            return False
    return True


def main():
    n = int(input())
    print("YES" if is_prime(n) else "NO")


main()
'''),
    ("q08-fibonacci", "desk-b", "correct", '''class Fib:
    def __init__(self):
        self.cache = {0: 0, 1: 1}

    def get(self, n):
        if n not in self.cache:
            self.cache[n] = self.get(n - 1) + self.get(n - 2)
        return self.cache[n]


def main():
    n = int(input())
    solver = Fib()
    for i in range(n + 1):
        solver.get(i)
    print(solver.get(n))


if __name__ == "__main__":
    main()
'''),
    ("q09-gcd", "desk-a", "broken", '''def gcd(a, b):
    while b != 0
        a, b = b, a % b
    return a


def main():
    a, b = map(int, input().split())
    print(gcd(a, b))


main()
'''),
    ("q10-palindrome", "desk-b", "correct", '''import re


def normalize(text):
    return re.sub(r"[^0-9a-z]", "", text.lower())


def is_palindrome(text):
    cleaned = normalize(text)
    left, right = 0, len(cleaned) - 1
    while left < right:
        if cleaned[left] != cleaned[right]:
            return False
        left += 1
        right -= 1
    return True


def main():
    line = input()
    if is_palindrome(line):
        print("YES")
    else:
        print("NO")


main()
'''),
]

C = [
    ("q01-sum", "desk-a", "correct", '''#include <stdio.h>

int main(void) {
    int n;
    long long total = 0;
    if (scanf("%d", &n) != 1) return 1;
    for (int i = 0; i < n; i++) {
        long long x;
        scanf("%lld", &x);
        total += x;
    }
    printf("%lld\\n", total);
    return 0;
}
'''),
    ("q02-max", "desk-b", "correct", '''#include <stdio.h>
#include <limits.h>

/* largest of n values */
int main(void) {
    int n, best = INT_MIN;
    scanf("%d", &n);
    for (int i = 0; i < n; i++) {
        int v;
        scanf("%d", &v);
        if (v > best) best = v;
    }
    printf("%d\\n", best);
    return 0;
}
'''),
    ("q03-reverse", "desk-a", "correct", '''#include <stdio.h>
#include <string.h>

static void reverse(char *s) {
    size_t len = strlen(s);
    for (size_t i = 0; i < len / 2; i++) {
        char tmp = s[i];
        s[i] = s[len - 1 - i];
        s[len - 1 - i] = tmp;
    }
}

int main(void) {
    char line[1024];
    if (!fgets(line, sizeof line, stdin)) return 0;
    line[strcspn(line, "\\n")] = '\\0';
    reverse(line);
    puts(line);
    return 0;
}
'''),
    ("q04-vowels", "desk-b", "buggy", '''#include <stdio.h>

int is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

int main(void) {
    char buf[1024];
    int count = 0;
    if (fgets(buf, sizeof buf, stdin) == NULL) return 0;
    for (int i = 0; buf[i] != '\\0'; i++) {
        if (is_vowel(buf[i])) count++;
    }
    printf("%d\\n", count);
    return 0;
}
'''),
    ("q05-fizzbuzz", "desk-a", "correct", '''#include <stdio.h>

int main(void) {
    int n;
    scanf("%d", &n);
    for (int i = 1; i <= n; i++) {
        if (i % 15 == 0)
            printf("FizzBuzz\\n");
        else if (i % 3 == 0)
            printf("Fizz\\n");
        else if (i % 5 == 0)
            printf("Buzz\\n");
        else
            printf("%d\\n", i);
    }
    return 0;
}
'''),
    ("q06-factorial", "desk-b", "buggy", '''#include <stdio.h>

#define MOD 1000000007

int main(void) {
    int n;
    int acc = 1;
    scanf("%d", &n);
    for (int k = 2; k <= n; k++) {
        acc = (acc * k) % MOD;
    }
    printf("%d\\n", acc);
    return 0;
}
'''),
    ("q07-prime", "desk-a", "correct", '''#include <stdio.h>

static int is_prime(long long n) {
    if (n < 2) return 0;
    for (long long d = 2; d * d <= n; d++) {
        if (n % d == 0) return 0;
    }
    return 1;
}

int main(void) {
    long long n;
    scanf("%lld", &n);
    printf("%s\\n", is_prime(n) ? "YES" : "NO");
    return 0;
}
'''),
    ("q08-fibonacci", "desk-b", "broken", '''#include <stdio.h>

int main(void) {
    int n;
    long long a = 0, b = 1;
    scanf("%d", &n);
    for (int i = 0; i < n; i++) {
        long long next = a + b
        a = b;
        b = next;
    }
    printf("%lld\\n", a);
    return 0;
}
'''),
    ("q09-gcd", "desk-a", "correct", '''#include <stdio.h>

unsigned long long gcd(unsigned long long a, unsigned long long b) {
    while (b != 0) {
        unsigned long long r = a % b;
        a = b;
        b = r;
    }
    return a;
}

int main(void) {
    unsigned long long a, b;
    if (scanf("%llu %llu", &a, &b) != 2) return 1;
    printf("%llu\\n", gcd(a, b));
    return 0;
}
'''),
    ("q10-palindrome", "desk-b", "correct", '''#include <ctype.h>
#include <stdio.h>
#include <string.h>

int main(void) {
    char line[2048], clean[2048];
    int len = 0;
    if (!fgets(line, sizeof line, stdin)) return 0;
    for (int i = 0; line[i]; i++) {
        if (isalnum((unsigned char)line[i])) clean[len++] = (char)tolower((unsigned char)line[i]);
    }
    int ok = 1;
    for (int i = 0, j = len - 1; i < j; i++, j--) {
        if (clean[i] != clean[j]) {
            ok = 0;
            break;
        }
    }
    printf(ok ? "YES\\n" : "NO\\n");
    return 0;
}
'''),
]

CPP = [
    ("q01-sum", "desk-b", "correct", '''#include <iostream>
#include <vector>

using namespace std;

int main() {
    int n;
    cin >> n;
    vector<long long> values(n);
    for (auto &v : values) cin >> v;
    long long total = 0;
    for (long long v : values) total += v;
    cout << total << endl;
    return 0;
}
'''),
    ("q02-max", "desk-a", "correct", '''#include <algorithm>
#include <iostream>
#include <vector>

int main() {
    int n;
    std::cin >> n;
    std::vector<int> values(n);
    for (int i = 0; i < n; ++i) {
        std::cin >> values[i];
    }
    std::cout << *std::max_element(values.begin(), values.end()) << "\\n";
    return 0;
}
'''),
    ("q03-reverse", "desk-b", "correct", '''#include <algorithm>
#include <iostream>
#include <string>

// reverse one line
int main() {
    std::string line;
    std::getline(std::cin, line);
    std::reverse(line.begin(), line.end());
    std::cout << line << std::endl;
    return 0;
}
'''),
    ("q04-vowels", "desk-a", "correct", '''#include <cctype>
#include <iostream>
#include <string>

class VowelCounter {
public:
    int count(const std::string &text) const {
        int total = 0;
        for (char c : text) {
            char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (lower == 'a' || lower == 'e' || lower == 'i' || lower == 'o' || lower == 'u') {
                ++total;
            }
        }
        return total;
    }
};

int main() {
    std::string text;
    std::getline(std::cin, text);
    VowelCounter counter;
    std::cout << counter.count(text) << "\\n";
    return 0;
}
'''),
    ("q05-fizzbuzz", "desk-b", "buggy", '''#include <iostream>

using namespace std;

int main() {
    int n;
    cin >> n;
    for (int i = 1; i < n; i++) {
        if (i % 3 == 0 && i % 5 == 0) {
            cout << "FizzBuzz" << endl;
        } else if (i % 3 == 0) {
            cout << "Fizz" << endl;
        } else if (i % 5 == 0) {
            cout << "Buzz" << endl;
        } else {
            cout << i << endl;
        }
    }
    return 0;
}
'''),
    ("q06-factorial", "desk-a", "correct", '''#include <iostream>

const long long MOD = 1000000007LL;

long long factorial_mod(int n) {
    long long acc = 1;
    for (int k = 2; k <= n; ++k) {
        acc = acc * k % MOD;
    }
    return acc;
}

int main() {
    int n;
    std::cin >> n;
    std::cout << factorial_mod(n) << std::endl;
    return 0;
}
'''),
    ("q07-prime", "desk-b", "broken", '''#include <iostream>

bool isPrime(long long n) {
    if (n < 2) return false;
    for (long long d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

int main() {
    long long n;
    std::cin >> n;
    std::cout << (isPrime(n) ? "YES" : "NO") << std::endl
    return 0;
}
'''),
    ("q08-fibonacci", "desk-a", "correct", '''#include <iostream>
#include <vector>

int main() {
    int n;
    std::cin >> n;
    std::vector<long long> fib(n + 2, 0);
    fib[1] = 1;
    for (int i = 2; i <= n; ++i) {
        fib[i] = fib[i - 1] + fib[i - 2];
    }
    std::cout << fib[n] << "\\n";
    return 0;
}
'''),
    ("q09-gcd", "desk-b", "buggy", '''#include <iostream>

using namespace std;

int gcd(int a, int b) {
    if (a == 0) return b;
    return gcd(b % a, a);
}

int main() {
    long long a, b;
    cin >> a >> b;
    cout << gcd(a, b) << endl;
    return 0;
}
'''),
    ("q10-palindrome", "desk-a", "correct", '''#include <cctype>
#include <iostream>
#include <string>

namespace check {

bool palindrome(const std::string &raw) {
    std::string s;
    for (char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    for (size_t i = 0, j = s.empty() ? 0 : s.size() - 1; i < j; ++i, --j) {
        if (s[i] != s[j]) return false;
    }
    return true;
}

}  // namespace check

int main() {
    std::string line;
    std::getline(std::cin, line);
    std::cout << (check::palindrome(line) ? "YES" : "NO") << std::endl;
    return 0;
}
'''),
]

JAVA = [
    ("q01-sum", "desk-a", "correct", '''import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        int n = in.nextInt();
        long total = 0;
        for (int i = 0; i < n; i++) {
            total += in.nextLong();
        }
        System.out.println(total);
    }
}
'''),
    ("q02-max", "desk-b", "buggy", '''import java.util.Scanner;

public class Main {
    static int largest(int[] values) {
        int best = 0;
        for (int v : values) {
            if (v > best) {
                best = v;
            }
        }
        return best;
    }

    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        int n = in.nextInt();
        int[] values = new int[n];
        for (int i = 0; i < n; i++) {
            values[i] = in.nextInt();
        }
        System.out.println(largest(values));
    }
}
'''),
    ("q03-reverse", "desk-a", "correct", '''import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        String line = in.hasNextLine() ? in.nextLine() : "";
        StringBuilder sb = new StringBuilder(line);
        System.out.println(sb.reverse().toString());
    }
}
'''),
    ("q04-vowels", "desk-b", "correct", '''import java.io.BufferedReader;
import java.io.IOException;
import java.io.InputStreamReader;

public class Main {
    private static final String VOWELS = "aeiouAEIOU";

    static int countVowels(String text) {
        int count = 0;
        for (int i = 0; i < text.length(); i++) {
            if (VOWELS.indexOf(text.charAt(i)) >= 0) {
                count++;
            }
        }
        return count;
    }

    public static void main(String[] args) throws IOException {
        BufferedReader reader = new BufferedReader(new InputStreamReader(System.in));
        String text = reader.readLine();
        System.out.println(countVowels(text == null ? "" : text));
    }
}
'''),
    ("q05-fizzbuzz", "desk-a", "broken", '''import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        int n = in.nextInt();
        for (int i = 1; i <= n; i++) {
            if (i % 15 == 0) {
                System.out.println("FizzBuzz");
            } else if (i % 3 == 0) {
                System.out.println("Fizz")
            } else if (i % 5 == 0) {
                System.out.println("Buzz");
            } else {
                System.out.println(i);
            }
        }
    }
}
'''),
    ("q06-factorial", "desk-b", "correct", '''import java.util.Scanner;

public class Main {
    static final long MOD = 1_000_000_007L;

    /**
     * Factorial modulo a prime.
     */
    static long factorialMod(int n) {
        long acc = 1;
        for (int k = 2; k <= n; k++) {
            acc = acc * k % MOD;
        }
        return acc;
    }

    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        System.out.println(factorialMod(in.nextInt()));
    }
}
'''),
    ("q07-prime", "desk-a", "correct", '''import java.util.Scanner;

public class Main {
    static boolean isPrime(long n) {
        if (n < 2) {
            return false;
        }
        for (long d = 2; d * d <= n; d++) {
            if (n % d == 0) {
                return false;
            }
        }
        return true;
    }

    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        long n = in.nextLong();
        System.out.println(isPrime(n) ? "YES" : "NO");
    }
}
'''),
    ("q08-fibonacci", "desk-b", "buggy", '''import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        int n = in.nextInt();
        int a = 0;
        int b = 1;
        for (int i = 0; i < n; i++) {
            int next = a + b;
            a = b;
            b = next;
        }
        System.out.println(a);
    }
}
'''),
    ("q09-gcd", "desk-a", "correct", '''import java.util.Scanner;

public class Main {
    static long gcd(long a, long b) {
        return b == 0 ? a : gcd(b, a % b);
    }

    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        long a = in.nextLong();
        long b = in.nextLong();
        System.out.println(gcd(a, b));
    }
}
'''),
    ("q10-palindrome", "desk-b", "correct", '''import java.util.Scanner;

public class Main {
    static boolean isPalindrome(String raw) {
        String s = raw.toLowerCase().replaceAll("[^a-z0-9]", "");
        int left = 0;
        int right = s.length() - 1;
        while (left < right) {
            if (s.charAt(left) != s.charAt(right)) {
                return false;
            }
            left++;
            right--;
        }
        return true;
    }

    public static void main(String[] args) {
        Scanner in = new Scanner(System.in);
        String line = in.hasNextLine() ? in.nextLine() : "";
        System.out.println(isPalindrome(line) ? "YES" : "NO");
    }
}
'''),
]

FIXTURES = {
    "q01-sum": ["3\n1 2 3\n", "5\n-4 10 0 7 -1\n", "1\n1000000\n", "0\n"],
    "q02-max": ["3\n1 5 2\n", "4\n-7 -3 -9 -4\n", "1\n42\n"],
    "q03-reverse": ["hello\n", "a man a plan\n", "x\n"],
    "q04-vowels": ["Programming is fun\n", "AEIOU aeiou\n", "rhythm\n"],
    "q05-fizzbuzz": ["15\n", "1\n", "7\n"],
    "q06-factorial": ["0\n", "5\n", "20\n", "1000\n"],
    "q07-prime": ["2\n", "25\n", "97\n", "1000000007\n", "49\n"],
    "q08-fibonacci": ["0\n", "1\n", "10\n", "50\n", "90\n"],
    "q09-gcd": ["12 18\n", "7 0\n", "100 75\n"],
    "q10-palindrome": ["A man, a plan, a canal: Panama\n", "hello\n", "No lemon, no melon\n"],
}

LANGS = [("python", "py", PYTHON), ("c", "c", C), ("cpp", "cpp", CPP), ("java", "java", JAVA)]


def main():
    corpus, fixtures = [], []
    for lang, short, programs in LANGS:
        assert len(programs) == 10, lang
        for q, tag, verdict, text in programs:
            difficulty, description = PROBLEMS[q]
            sid = f"desk-{short}-{q[:3]}"
            corpus.append({
                "submission_id": sid,
                "question_id": q,
                "language": lang,
                "source_tag": tag,
                "difficulty_tag": difficulty,
                "problem_description": description,
                "text": text,
            })
            fixtures.append({"submission_id": sid, "verdict": verdict, "inputs": FIXTURES[q]})
    data = ROOT / "data"
    data.mkdir(exist_ok=True)
    with open(data / "desk_corpus.jsonl", "w", encoding="utf-8") as f:
        for rec in corpus:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(data / "desk_fixtures.jsonl", "w", encoding="utf-8") as f:
        for rec in fixtures:
            f.write(json.dumps(rec) + "\n")
    print(f"wrote {len(corpus)} programs")


if __name__ == "__main__":
    main()
